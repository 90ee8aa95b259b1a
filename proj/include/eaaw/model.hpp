#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaaw/autodiff.hpp"
#include "eaaw/dataset.hpp"
#include "eaaw/tensor.hpp"

namespace eaaw {

enum class Backend : std::uint8_t { kClassifier = 0, kCausalLm = 1 };

struct ModelSpec {
  Backend backend = Backend::kClassifier;
  std::vector<int> hidden;
  // classifier
  int input_dim = 0;
  int classes = 0;
  // causal LM
  int vocab = 0;
  int context = 0;
  int embed_dim = 0;

  void validate() const;
  bool operator==(const ModelSpec&) const = default;

  static ModelSpec classifier(int input_dim, std::vector<int> hidden,
                              int classes);
  static ModelSpec causal_lm(int vocab, int context, int embed_dim,
                             std::vector<int> hidden);
};

struct PredictOutput {
  Tensor probs;
  int predicted = -1;
};

// Black-box prediction surface. Extraction, verification, and attacks
// consume models only through this interface.
class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual std::vector<PredictOutput> predict_batch(
      const std::vector<Tensor>& inputs) const = 0;
  // Per target position t (>= 1), the probability the model assigns to
  // tokens[t] conditioned on tokens[0..t-1].
  virtual std::vector<double> lm_target_probs(
      const std::vector<int>& tokens,
      const std::vector<int>& positions) const = 0;
};

class Model : public BlackBox {
 public:
  Model() = default;

  static Model init(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  std::vector<PredictOutput> predict_batch(
      const std::vector<Tensor>& inputs) const override;
  PredictOutput predict(const Tensor& input) const;
  std::vector<double> lm_target_probs(
      const std::vector<int>& tokens,
      const std::vector<int>& positions) const override;

  // Differentiable forward passes for training and embedding.
  Tape::NodeId forward_logits(Tape& tape, Tape::NodeId input) const;
  Tape::NodeId forward_logits_lm(Tape& tape,
                                 const std::vector<int>& context) const;

  // Fixed-length context window for predicting position `pos`
  // (tokens [pos-L, pos), left-padded with <unk>).
  std::vector<int> context_window(const std::vector<int>& tokens,
                                  int pos) const;
  Vec lm_next_probs(const std::vector<int>& context) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  Vec classifier_logits(const Vec& x) const;
  ModelSpec spec_;
  ParamStore params_;
};

struct TrainConfig {
  int epochs = 20;
  OptConfig opt{OptKind::kSgd, 0.05};
  int batch = 64;
  std::uint64_t seed = 0;
};

Model train(const ModelSpec& spec, const ClassifierDataset& data,
            const TrainConfig& cfg);
Model train(const ModelSpec& spec, const TokenDataset& data,
            const TrainConfig& cfg);
// Continue training an existing model (fine-tuning).
void train_inplace(Model& model, const ClassifierDataset& data,
                   const TrainConfig& cfg);
void train_inplace(Model& model, const TokenDataset& data,
                   const TrainConfig& cfg);

double accuracy(const BlackBox& model, const ClassifierDataset& data);
// Mean probability assigned to the true next token over the dataset.
double lm_mean_target_prob(const Model& model, const TokenDataset& data);

bool models_equal(const Model& a, const Model& b);

}  // namespace eaaw
