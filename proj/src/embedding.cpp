#include "eaaw/embedding.hpp"

#include <cmath>
#include <fstream>

#include "eaaw/rng.hpp"
#include "eaaw/verification.hpp"

namespace eaaw {

void EmbedConfig::validate() const {
  if (r1 <= 0.0) throw ConfigError("embed config: r1 must be > 0");
  if (epsilon <= 0.0) throw ConfigError("embed config: epsilon must be > 0");
  if (epochs < 1) throw ConfigError("embed config: epochs must be >= 1");
  if (lambda < 0.0) throw ConfigError("embed config: lambda must be >= 0");
  if (batch < 1) throw ConfigError("embed config: batch must be >= 1");
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_lengths(const Vec& e, const Watermark& wm) {
  if (e.size() != wm.k())
    throw DimensionError("watermark loss: length mismatch");
}

}  // namespace

double hinge_loss(const Vec& e, const Watermark& wm, double epsilon) {
  check_lengths(e, wm);
  double loss = 0.0;
  for (int i = 0; i < wm.k(); ++i)
    loss += std::max(0.0, epsilon - e[i] * wm.bits[i]);
  return loss;
}

double ce_watermark_loss(const Vec& e, const Watermark& wm) {
  check_lengths(e, wm);
  double loss = 0.0;
  for (int i = 0; i < wm.k(); ++i) {
    // numerically stable -log sigmoid(+-e) = log(1 + exp(-+e))
    double z = wm.bits[i] == 1 ? e[i] : -e[i];
    loss += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return loss;
}

double mse_watermark_loss(const Vec& e, const Watermark& wm) {
  check_lengths(e, wm);
  double loss = 0.0;
  for (int i = 0; i < wm.k(); ++i) {
    double b = wm.bits[i] == 1 ? 1.0 : 0.0;
    double d = b - sigmoid(e[i]);
    loss += d * d;
  }
  return loss;
}

double watermark_loss(WmLossKind kind, const Vec& e, const Watermark& wm,
                      double epsilon) {
  switch (kind) {
    case WmLossKind::kHinge:
      return hinge_loss(e, wm, epsilon);
    case WmLossKind::kCe:
      return ce_watermark_loss(e, wm);
    case WmLossKind::kMse:
      return mse_watermark_loss(e, wm);
  }
  throw ConfigError("unknown watermark loss");
}

Vec watermark_loss_grad(WmLossKind kind, const Vec& e, const Watermark& wm,
                        double epsilon) {
  check_lengths(e, wm);
  Vec g = Vec::Zero(e.size());
  for (int i = 0; i < wm.k(); ++i) {
    double b = wm.bits[i] == 1 ? 1.0 : 0.0;
    double s = sigmoid(e[i]);
    switch (kind) {
      case WmLossKind::kHinge:
        if (epsilon - e[i] * wm.bits[i] > 0.0) g[i] = -wm.bits[i];
        break;
      case WmLossKind::kCe:
        g[i] = s - b;
        break;
      case WmLossKind::kMse:
        g[i] = 2.0 * (s - b) * s * (1.0 - s);
        break;
    }
  }
  return g;
}

namespace {

// Builds the differentiable metric scalar nodes for one trigger: one node
// per mask, value equal to the extraction metric in logits mode.
std::vector<Tape::NodeId> build_metric_nodes(Tape& tape, const Model& model,
                                             const TriggerSample& trigger,
                                             const MaskSet& masks,
                                             const BasicPartition& part) {
  std::vector<Tape::NodeId> nodes;
  nodes.reserve(masks.c());
  for (int i = 0; i < masks.c(); ++i) {
    if (trigger.backend == Backend::kClassifier) {
      Tensor masked = apply_mask(trigger.input, masks.masks.row(i), part);
      Tape::NodeId logits = model.forward_logits(tape, tape.input(masked));
      nodes.push_back(tape.softmax_prob(logits, trigger.label));
    } else {
      std::vector<int> masked =
          apply_mask_tokens(trigger.tokens, masks.masks.row(i), part);
      Tape::NodeId mean = -1;
      for (int pos : trigger.target_positions) {
        std::vector<int> query = masked;
        query[pos] = trigger.tokens[pos];
        Tape::NodeId logits =
            model.forward_logits_lm(tape, model.context_window(query, pos));
        Tape::NodeId p = tape.softmax_prob(logits, trigger.tokens[pos]);
        mean = mean < 0 ? p : tape.add(mean, p);
      }
      nodes.push_back(tape.scale(
          mean, 1.0 / static_cast<double>(trigger.target_positions.size())));
    }
  }
  return nodes;
}

// L1 term of one trigger sample (cross-entropy against its ground truth).
Tape::NodeId trigger_task_loss(Tape& tape, const Model& model,
                               const TriggerSample& trigger) {
  if (trigger.backend == Backend::kClassifier) {
    Tape::NodeId logits =
        model.forward_logits(tape, tape.input(trigger.input));
    return tape.softmax_cross_entropy(logits, trigger.label);
  }
  Tape::NodeId sum = -1;
  for (int pos : trigger.target_positions) {
    Tape::NodeId logits = model.forward_logits_lm(
        tape, model.context_window(trigger.tokens, pos));
    Tape::NodeId ce = tape.softmax_cross_entropy(logits, trigger.tokens[pos]);
    sum = sum < 0 ? ce : tape.add(sum, ce);
  }
  return tape.scale(
      sum, 1.0 / static_cast<double>(trigger.target_positions.size()));
}

}  // namespace

std::pair<double, double> joint_loss_backward(
    Model& model, const JointBatch& batch,
    const std::vector<TriggerSample>& triggers, const Watermark& wm,
    const EmbedConfig& cfg, const MaskSet& masks, const BasicPartition& part,
    const Mat& jac, double r1_signed) {
  Tape tape(model.params());
  // L1 averages task cross-entropy over the batch plus every trigger
  Tape::NodeId l1 = -1;
  long terms = 0;
  for (std::size_t i = 0; i < batch.x.size(); ++i, ++terms) {
    Tape::NodeId logits =
        model.forward_logits(tape, tape.input(*batch.x[i]));
    Tape::NodeId ce = tape.softmax_cross_entropy(logits, batch.y[i]);
    l1 = l1 < 0 ? ce : tape.add(l1, ce);
  }
  for (const auto& [seq, t] : batch.lm) {
    Tape::NodeId logits =
        model.forward_logits_lm(tape, model.context_window(*seq, t));
    Tape::NodeId ce = tape.softmax_cross_entropy(logits, (*seq)[t]);
    l1 = l1 < 0 ? ce : tape.add(l1, ce);
    ++terms;
  }
  for (const auto& trig : triggers) {
    Tape::NodeId tl = trigger_task_loss(tape, model, trig);
    l1 = l1 < 0 ? tl : tape.add(l1, tl);
    ++terms;
  }
  if (l1 < 0) throw DataError("joint loss: empty batch and trigger set");
  l1 = tape.scale(l1, 1.0 / static_cast<double>(terms));
  double l1_val = tape.value(l1).values[0];
  if (!std::isfinite(l1_val))
    throw NumericError("embedding diverged: task loss L1 is non-finite");

  const int c = masks.c();
  std::vector<std::pair<Tape::NodeId, double>> seeds{{l1, 1.0}};
  double l2_total = 0.0;
  for (const auto& trig : triggers) {
    auto nodes = build_metric_nodes(tape, model, trig, masks, part);
    Vec v(c);
    for (int i = 0; i < c; ++i) v[i] = tape.value(nodes[i]).values[0];
    Vec e = jac * v;
    double l2 = watermark_loss(cfg.loss, e, wm, cfg.epsilon);
    if (!std::isfinite(l2))
      throw NumericError("embedding diverged: watermark loss L2 is non-finite");
    l2_total += l2;
    Vec dv =
        jac.transpose() * watermark_loss_grad(cfg.loss, e, wm, cfg.epsilon);
    for (int i = 0; i < c; ++i) seeds.emplace_back(nodes[i], r1_signed * dv[i]);
  }
  tape.backward(seeds);
  return {l1_val, l2_total};
}

EmbedResult joint_optimize(const Model& model, const ClassifierDataset* benign,
                           const TokenDataset* benign_lm,
                           const std::vector<TriggerSample>& triggers,
                           const Watermark& wm, const EmbedConfig& cfg,
                           double r1_signed) {
  wm.validate();
  if (triggers.empty()) throw DataError("embed: no trigger samples");
  const int k = wm.k();
  const int input_len = trigger_input_len(triggers[0]);
  for (const auto& t : triggers)
    if (trigger_input_len(t) != input_len)
      throw DimensionError("embed: trigger input lengths differ");
  BasicPartition part = segment_input(input_len, k);
  int c = cfg.c;
  if (c == 0)
    c = cfg.scheme == MaskScheme::kLeaveOneOut ? k : kLabelOnlyMaskFactor * k;
  MaskSet masks = generate_masks(c, k, cfg.scheme, cfg.mask_seed);
  Mat jac = extraction_jacobian(masks.masks, cfg.lambda);

  EmbedResult res;
  res.model = model;
  res.masks = masks;
  res.partition = part;
  Model& m = res.model;

  Rng rng(cfg.seed);
  OptState opt_state;

  // benign item index space
  std::vector<std::pair<int, int>> lm_items;
  std::vector<int> cls_items;
  if (benign) {
    if (benign->size() == 0) throw DataError("embed: empty benign dataset");
    cls_items.resize(benign->size());
    for (std::size_t i = 0; i < cls_items.size(); ++i)
      cls_items[i] = static_cast<int>(i);
  } else {
    if (!benign_lm || benign_lm->size() == 0)
      throw DataError("embed: empty benign dataset");
    for (std::size_t s = 0; s < benign_lm->seqs.size(); ++s)
      for (std::size_t t = 1; t < benign_lm->seqs[s].size(); ++t)
        lm_items.emplace_back(static_cast<int>(s), static_cast<int>(t));
  }
  std::size_t n_items = benign ? cls_items.size() : lm_items.size();

  auto benign_quality = [&]() {
    return benign ? accuracy(m, *benign) : lm_mean_target_prob(m, *benign_lm);
  };
  const double pre_quality = benign_quality();

  // Embedding keeps the best epoch seen (highest WSR, then lowest L2,
  // subject to near-pre-embedding benign quality): late joint-loss steps can
  // fall into a saturated region that a fixed epoch budget would return.
  const bool keep_best = r1_signed > 0.0;
  Model best_model = m;
  double best_wsr = -1.0, best_l2 = 0.0;
  int converged_streak = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (benign)
      rng.shuffle(cls_items);
    else
      rng.shuffle(lm_items);
    double l1_sum = 0.0;
    long l1_steps = 0;
    double l2_last = 0.0;
    for (std::size_t start = 0; start < n_items;
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(n_items, start + cfg.batch);
      JointBatch jb;
      for (std::size_t i = start; i < end; ++i) {
        if (benign) {
          jb.x.push_back(&benign->x[cls_items[i]]);
          jb.y.push_back(benign->y[cls_items[i]]);
        } else {
          const auto& [s, t] = lm_items[i];
          jb.lm.emplace_back(&benign_lm->seqs[s], t);
        }
      }
      m.params().zero_grads();
      auto [l1_val, l2_val] =
          joint_loss_backward(m, jb, triggers, wm, cfg, masks, part, jac,
                              r1_signed);
      optimizer_step(m.params(), cfg.opt, opt_state);
      l1_sum += l1_val;
      ++l1_steps;
      l2_last = l2_val;
    }

    EpochStats st;
    st.epoch = epoch + 1;
    st.l1 = l1_sum / static_cast<double>(l1_steps);
    st.l2 = l2_last;
    Watermark extracted = extract_watermark(m, triggers[0], masks, part,
                                            MetricMode::kLogits, cfg.lambda);
    st.wsr = wsr(extracted, wm);
    st.benign_acc = benign_quality();
    res.history.push_back(st);

    if (keep_best && st.benign_acc >= pre_quality - 0.01 &&
        (st.wsr > best_wsr || (st.wsr == best_wsr && st.l2 <= best_l2))) {
      best_model = m;
      best_wsr = st.wsr;
      best_l2 = st.l2;
    }
    if (cfg.early_stop && keep_best) {
      // Full hinge margins, not merely correct signs: margins keep growing
      // after WSR reaches 1.0 and carry the robustness to later attacks.
      converged_streak = st.l2 == 0.0 ? converged_streak + 1 : 0;
      if (converged_streak >= 3 && st.benign_acc >= pre_quality - 0.01) break;
    }
  }
  if (keep_best && best_wsr >= 0.0) res.model = std::move(best_model);
  return res;
}

EmbedResult embed_watermark(const Model& model, const ClassifierDataset& benign,
                            const std::vector<TriggerSample>& triggers,
                            const Watermark& wm, const EmbedConfig& cfg) {
  cfg.validate();
  return joint_optimize(model, &benign, nullptr, triggers, wm, cfg, cfg.r1);
}

EmbedResult embed_watermark(const Model& model, const TokenDataset& benign,
                            const std::vector<TriggerSample>& triggers,
                            const Watermark& wm, const EmbedConfig& cfg) {
  cfg.validate();
  return joint_optimize(model, nullptr, &benign, triggers, wm, cfg, cfg.r1);
}

double joint_loss_eval(const Model& model, const ClassifierDataset& batch,
                       const std::vector<TriggerSample>& triggers,
                       const Watermark& wm, const EmbedConfig& cfg,
                       const MaskSet& masks, const BasicPartition& part) {
  double l1 = 0.0;
  long terms = 0;
  for (std::size_t i = 0; i < batch.size(); ++i, ++terms) {
    auto out = model.predict_batch({batch.x[i]});
    l1 += -std::log(out[0].probs[batch.y[i]]);
  }
  for (const auto& trig : triggers) {
    auto out = model.predict_batch({trig.input});
    l1 += -std::log(out[0].probs[trig.label]);
    ++terms;
  }
  l1 /= static_cast<double>(terms);
  double l2 = 0.0;
  for (const auto& trig : triggers) {
    Vec v = metric_vector(model, trig, masks, part, MetricMode::kLogits);
    ExplanationWeights e = ridge_fit(masks.masks, v, cfg.lambda);
    l2 += watermark_loss(cfg.loss, e.w, wm, cfg.epsilon);
  }
  return l1 + cfg.r1 * l2;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for write: " + path);
  f << "epoch,L1,L2,WSR,benign_acc\n";
  f.precision(12);
  for (const auto& st : history)
    f << st.epoch << "," << st.l1 << "," << st.l2 << "," << st.wsr << ","
      << st.benign_acc << "\n";
}

}  // namespace eaaw
