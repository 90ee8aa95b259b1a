#pragma once

#include "eaaw/extraction.hpp"

namespace eaaw {

enum class WmLossKind { kHinge, kCe, kMse };

struct EmbedConfig {
  double r1 = 1.0;           // watermark-loss coefficient
  double epsilon = 0.01;     // hinge margin
  WmLossKind loss = WmLossKind::kHinge;
  int epochs = 30;
  OptConfig opt{OptKind::kAdam, 1e-3};
  double lambda = kDefaultRidgeLambda;
  MaskScheme scheme = MaskScheme::kLeaveOneOut;
  int c = 0;                 // 0 -> k (leave-one-out) / 16k (random)
  int batch = 64;
  std::uint64_t seed = 0;
  std::uint64_t mask_seed = 0;
  bool early_stop = true;

  void validate() const;
};

double hinge_loss(const Vec& e, const Watermark& wm, double epsilon);
double ce_watermark_loss(const Vec& e, const Watermark& wm);
double mse_watermark_loss(const Vec& e, const Watermark& wm);
double watermark_loss(WmLossKind kind, const Vec& e, const Watermark& wm,
                      double epsilon);
// dL2/de for the chosen loss.
Vec watermark_loss_grad(WmLossKind kind, const Vec& e, const Watermark& wm,
                        double epsilon);

struct EpochStats {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double wsr = 0.0;
  double benign_acc = 0.0;  // accuracy (classifier) / mean target prob (LM)
};

struct EmbedResult {
  Model model;
  std::vector<EpochStats> history;
  MaskSet masks;
  BasicPartition partition;
};

EmbedResult embed_watermark(const Model& model, const ClassifierDataset& benign,
                            const std::vector<TriggerSample>& triggers,
                            const Watermark& wm, const EmbedConfig& cfg);
EmbedResult embed_watermark(const Model& model, const TokenDataset& benign,
                            const std::vector<TriggerSample>& triggers,
                            const Watermark& wm, const EmbedConfig& cfg);

// Shared optimizer loop behind embed_watermark and the unlearning attack;
// `r1_signed` < 0 ascends the watermark loss instead of descending it.
EmbedResult joint_optimize(const Model& model, const ClassifierDataset* benign,
                           const TokenDataset* benign_lm,
                           const std::vector<TriggerSample>& triggers,
                           const Watermark& wm, const EmbedConfig& cfg,
                           double r1_signed);

// One mini-batch of task items. Pointers reference caller-owned storage.
struct JointBatch {
  std::vector<const Tensor*> x;
  std::vector<int> y;
  // (sequence, target position) pairs for the LM backend
  std::vector<std::pair<const std::vector<int>*, int>> lm;
};

// Single optimization step body: evaluates L1 and L2 and accumulates
// d(L1 + r1_signed * L2)/dtheta into the model's gradient slots.
// `jac` is extraction_jacobian(masks.masks, cfg.lambda). Returns (L1, L2).
std::pair<double, double> joint_loss_backward(
    Model& model, const JointBatch& batch,
    const std::vector<TriggerSample>& triggers, const Watermark& wm,
    const EmbedConfig& cfg, const MaskSet& masks, const BasicPartition& part,
    const Mat& jac, double r1_signed);

// Pure (tape-free) evaluation of L1 + r1 * L2 on a fixed batch; the
// finite-difference reference path for gradient checks.
double joint_loss_eval(const Model& model, const ClassifierDataset& batch,
                       const std::vector<TriggerSample>& triggers,
                       const Watermark& wm, const EmbedConfig& cfg,
                       const MaskSet& masks, const BasicPartition& part);

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history);

}  // namespace eaaw
