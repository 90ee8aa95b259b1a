#include "eaaw/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "eaaw/rng.hpp"

namespace eaaw {

void write_attack_trace_csv(const std::string& path, const AttackTrace& trace) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for write: " + path);
  f << "step,benign_acc,wsr,log10_p\n";
  f.precision(12);
  for (const auto& p : trace)
    f << p.step << "," << p.benign_acc << "," << p.wsr << "," << p.log10_p
      << "\n";
}

AttackTracePoint probe_point(const BlackBox& model, const WatermarkProbe& probe,
                             int step, double lambda) {
  AttackTracePoint pt;
  pt.step = step;
  Watermark extracted = extract_watermark(model, probe.trigger, probe.masks,
                                          probe.part, MetricMode::kLogits,
                                          lambda);
  pt.wsr = wsr(extracted, probe.original);
  pt.log10_p = chi_squared_log_p(extracted, probe.original).second;
  if (probe.benign_eval)
    pt.benign_acc = accuracy(model, *probe.benign_eval);
  else if (probe.benign_eval_lm) {
    const auto* m = dynamic_cast<const Model*>(&model);
    if (m) pt.benign_acc = lm_mean_target_prob(*m, *probe.benign_eval_lm);
  }
  return pt;
}

namespace {

template <typename Dataset>
Model finetune_impl(const Model& model, const Dataset& heldout, int epochs,
                    double lr, std::uint64_t seed, const WatermarkProbe* probe,
                    AttackTrace* trace) {
  if (epochs < 0) throw ConfigError("finetune: epochs must be >= 0");
  Model m = model;
  if (probe && trace) trace->push_back(probe_point(m, *probe, 0));
  Rng rng(seed);
  for (int e = 0; e < epochs; ++e) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.opt = OptConfig{OptKind::kSgd, lr};
    cfg.seed = rng.next_u64();
    train_inplace(m, heldout, cfg);
    if (probe && trace) trace->push_back(probe_point(m, *probe, e + 1));
  }
  return m;
}

bool is_bias(const std::string& name) {
  return !name.empty() && name[0] == 'b';
}

}  // namespace

Model finetune_attack(const Model& model, const ClassifierDataset& heldout,
                      int epochs, double lr, std::uint64_t seed,
                      const WatermarkProbe* probe, AttackTrace* trace) {
  return finetune_impl(model, heldout, epochs, lr, seed, probe, trace);
}

Model finetune_attack(const Model& model, const TokenDataset& heldout,
                      int epochs, double lr, std::uint64_t seed,
                      const WatermarkProbe* probe, AttackTrace* trace) {
  return finetune_impl(model, heldout, epochs, lr, seed, probe, trace);
}

Model prune_attack(const Model& model, double rate, bool per_layer) {
  if (rate < 0.0 || rate > 1.0)
    throw ConfigError("prune: rate must lie in [0,1]");
  Model m = model;
  auto prune_group = [&](const std::vector<std::string>& names) {
    // (|w|, declaration order, index) triples sorted for a deterministic
    // global magnitude cut
    long total = 0;
    for (const auto& n : names) total += m.params().param(n).size();
    long quota = static_cast<long>(std::ceil(rate * static_cast<double>(total)));
    if (quota == 0) return;
    std::vector<std::tuple<double, int, long>> entries;
    entries.reserve(total);
    for (int o = 0; o < static_cast<int>(names.size()); ++o) {
      const Tensor& t = m.params().param(names[o]);
      for (long i = 0; i < t.size(); ++i)
        entries.emplace_back(std::abs(t[i]), o, i);
    }
    std::sort(entries.begin(), entries.end());
    for (long j = 0; j < quota; ++j) {
      auto [mag, o, i] = entries[j];
      m.params().param(names[o])[i] = 0.0;
    }
  };
  std::vector<std::string> weight_names;
  for (const auto& n : m.params().order)
    if (!is_bias(n)) weight_names.push_back(n);
  if (per_layer) {
    for (const auto& n : weight_names) prune_group({n});
  } else {
    prune_group(weight_names);
  }
  return m;
}

OverwriteResult overwrite_attack(const Model& model,
                                 const ClassifierDataset& benign,
                                 const TriggerSample& adversary_trigger,
                                 const Watermark& adversary_wm,
                                 const EmbedConfig& cfg,
                                 const WatermarkProbe* probe) {
  EmbedResult er =
      embed_watermark(model, benign, {adversary_trigger}, adversary_wm, cfg);
  OverwriteResult res;
  res.model = std::move(er.model);
  Watermark adv = extract_watermark(res.model, adversary_trigger, er.masks,
                                    er.partition, MetricMode::kLogits,
                                    cfg.lambda);
  res.adversary_wsr = wsr(adv, adversary_wm);
  if (probe) {
    AttackTracePoint pt = probe_point(res.model, *probe, 0, cfg.lambda);
    res.original_wsr = pt.wsr;
    res.original_log10_p = pt.log10_p;
  }
  return res;
}

Model unlearn_attack(const Model& model, const ClassifierDataset& benign,
                     const Watermark& guessed_wm,
                     const TriggerSample& random_trigger, double r1, int epochs,
                     const EmbedConfig& base, const WatermarkProbe* probe,
                     AttackTrace* trace) {
  if (r1 < 0.0) throw ConfigError("unlearn: r1 must be >= 0");
  if (epochs < 0) throw ConfigError("unlearn: epochs must be >= 0");
  if (probe && trace) trace->push_back(probe_point(model, *probe, 0));
  EmbedConfig cfg = base;
  cfg.epochs = std::max(1, epochs);
  cfg.early_stop = false;
  Model m = model;
  if (epochs > 0) {
    EmbedResult er = joint_optimize(model, &benign, nullptr, {random_trigger},
                                    guessed_wm, cfg, -r1);
    m = std::move(er.model);
    if (probe && trace)
      for (const auto& st : er.history)
        trace->push_back(probe_point(m, *probe, st.epoch));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Input-mask averaging
// ---------------------------------------------------------------------------

namespace {

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h) {
  // FNV-1a
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_input(const Tensor& x, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  return hash_bytes(x.values.data(),
                    static_cast<std::size_t>(x.size()) * sizeof(double), h);
}

std::uint64_t hash_tokens(const std::vector<int>& toks, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  return hash_bytes(toks.data(), toks.size() * sizeof(int), h);
}

Vec draw_mask(Rng& rng, int k, double tau) {
  Vec mask(k);
  for (int i = 0; i < k; ++i) mask[i] = rng.bernoulli(tau) ? 0.0 : 1.0;
  return mask;
}

}  // namespace

MaskedAverageModel::MaskedAverageModel(const BlackBox& inner,
                                       BasicPartition part, int h, double tau,
                                       std::uint64_t seed)
    : inner_(&inner), part_(part), h_(h), tau_(tau), seed_(seed) {
  if (h < 1) throw ConfigError("input mask: h must be >= 1");
  if (tau < 0.0 || tau > 1.0)
    throw ConfigError("input mask: tau must lie in [0,1]");
}

std::vector<PredictOutput> MaskedAverageModel::predict_batch(
    const std::vector<Tensor>& inputs) const {
  if (tau_ == 0.0) return inner_->predict_batch(inputs);
  std::vector<PredictOutput> outs;
  outs.reserve(inputs.size());
  for (const auto& x : inputs) {
    Rng rng(hash_input(x, seed_));
    std::vector<Tensor> masked;
    masked.reserve(h_);
    for (int i = 0; i < h_; ++i)
      masked.push_back(apply_mask(x, draw_mask(rng, part_.k, tau_), part_));
    auto inner_outs = inner_->predict_batch(masked);
    PredictOutput avg;
    avg.probs = Tensor({static_cast<int>(inner_outs[0].probs.size())});
    for (const auto& o : inner_outs) avg.probs.values += o.probs.values;
    avg.probs.values /= static_cast<double>(h_);
    Eigen::Index best = 0;
    avg.probs.values.maxCoeff(&best);
    avg.predicted = static_cast<int>(best);
    outs.push_back(std::move(avg));
  }
  return outs;
}

std::vector<double> MaskedAverageModel::lm_target_probs(
    const std::vector<int>& tokens, const std::vector<int>& positions) const {
  if (tau_ == 0.0) return inner_->lm_target_probs(tokens, positions);
  Rng rng(hash_tokens(tokens, seed_));
  std::vector<double> acc(positions.size(), 0.0);
  for (int i = 0; i < h_; ++i) {
    std::vector<int> masked =
        apply_mask_tokens(tokens, draw_mask(rng, part_.k, tau_), part_);
    // keep the queried targets themselves intact
    for (int pos : positions) masked[pos] = tokens[pos];
    auto probs = inner_->lm_target_probs(masked, positions);
    for (std::size_t j = 0; j < probs.size(); ++j) acc[j] += probs[j];
  }
  for (double& p : acc) p /= static_cast<double>(h_);
  return acc;
}

PredictOutput input_mask_attack(const BlackBox& model, const Tensor& input,
                                const BasicPartition& part, int h, double tau,
                                std::uint64_t seed) {
  MaskedAverageModel wrapped(model, part, h, tau, seed);
  return wrapped.predict_batch({input})[0];
}

}  // namespace eaaw
