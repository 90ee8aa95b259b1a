#pragma once

#include "eaaw/embedding.hpp"
#include "eaaw/verification.hpp"

namespace eaaw {

// Evaluation context threaded through attacks so each epoch can be scored
// against the owner's secret material.
struct WatermarkProbe {
  TriggerSample trigger;
  MaskSet masks;
  BasicPartition part;
  Watermark original;
  const ClassifierDataset* benign_eval = nullptr;
  const TokenDataset* benign_eval_lm = nullptr;
};

struct AttackTracePoint {
  int step = 0;
  double benign_acc = 0.0;  // accuracy (classifier) / mean target prob (LM)
  double wsr = 0.0;
  double log10_p = 0.0;
};
using AttackTrace = std::vector<AttackTracePoint>;

void write_attack_trace_csv(const std::string& path, const AttackTrace& trace);

// Point-in-time probe evaluation (step recorded as given).
AttackTracePoint probe_point(const BlackBox& model, const WatermarkProbe& probe,
                             int step, double lambda = kDefaultRidgeLambda);

// Plain continued training on held-out data; trace sampled once per epoch.
Model finetune_attack(const Model& model, const ClassifierDataset& heldout,
                      int epochs, double lr, std::uint64_t seed,
                      const WatermarkProbe* probe = nullptr,
                      AttackTrace* trace = nullptr);
Model finetune_attack(const Model& model, const TokenDataset& heldout,
                      int epochs, double lr, std::uint64_t seed,
                      const WatermarkProbe* probe = nullptr,
                      AttackTrace* trace = nullptr);

// Zeroes the ceil(rate * weight count) weight entries of smallest absolute
// value. Biases are exempt; ties break by parameter declaration order then
// index. `per_layer` applies the quota within each weight tensor instead.
Model prune_attack(const Model& model, double rate, bool per_layer = false);

struct OverwriteResult {
  Model model;
  double original_wsr = 0.0;
  double original_log10_p = 0.0;
  double adversary_wsr = 0.0;
};

// Adversary re-runs watermark embedding with their own trigger and payload.
OverwriteResult overwrite_attack(const Model& model,
                                 const ClassifierDataset& benign,
                                 const TriggerSample& adversary_trigger,
                                 const Watermark& adversary_wm,
                                 const EmbedConfig& cfg,
                                 const WatermarkProbe* probe = nullptr);

// Ascends the watermark loss of a guessed payload on an adversary-chosen
// trigger while preserving task loss: minimize L1 - r1 * L2.
Model unlearn_attack(const Model& model, const ClassifierDataset& benign,
                     const Watermark& guessed_wm,
                     const TriggerSample& random_trigger, double r1, int epochs,
                     const EmbedConfig& base,
                     const WatermarkProbe* probe = nullptr,
                     AttackTrace* trace = nullptr);

// Pre-processing defense: averages predictions over h random input masks
// with per-part zero probability tau. Wraps any black box; tau = 0
// reproduces the underlying model exactly. Masks are re-drawn per input from
// a hash of its contents, so outputs are pure functions of the input.
class MaskedAverageModel : public BlackBox {
 public:
  MaskedAverageModel(const BlackBox& inner, BasicPartition part, int h,
                     double tau, std::uint64_t seed);

  std::vector<PredictOutput> predict_batch(
      const std::vector<Tensor>& inputs) const override;
  std::vector<double> lm_target_probs(
      const std::vector<int>& tokens,
      const std::vector<int>& positions) const override;

 private:
  const BlackBox* inner_;
  BasicPartition part_;
  int h_;
  double tau_;
  std::uint64_t seed_;
};

PredictOutput input_mask_attack(const BlackBox& model, const Tensor& input,
                                const BasicPartition& part, int h, double tau,
                                std::uint64_t seed);

}  // namespace eaaw
