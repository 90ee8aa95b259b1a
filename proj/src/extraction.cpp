#include "eaaw/extraction.hpp"

#include <cmath>

namespace eaaw {

double metric_classifier(const PredictOutput& out, int label) {
  if (label < 0 || label >= out.probs.size())
    throw IndexError("metric: label out of range");
  return out.probs[label];
}

double metric_label_only(const PredictOutput& out, int label) {
  if (label < 0 || label >= out.probs.size())
    throw IndexError("metric: label out of range");
  return out.predicted == label ? 1.0 : 0.0;
}

double metric_lm(const std::vector<double>& target_probs) {
  if (target_probs.empty()) throw DataError("metric: no target probabilities");
  double sum = 0.0;
  for (double p : target_probs) sum += p;
  return sum / static_cast<double>(target_probs.size());
}

ExplanationWeights ridge_fit(const Mat& masks, const Vec& v, double lambda) {
  if (lambda < 0.0) throw ConfigError("ridge lambda must be >= 0");
  if (masks.rows() != v.size())
    throw DimensionError("ridge_fit: metric vector length != mask count");
  const long k = masks.cols();
  Mat gram = masks.transpose() * masks;
  gram.diagonal().array() += lambda;
  Vec rhs = masks.transpose() * v;
  Eigen::LDLT<Mat> ldlt(gram);
  Vec w = ldlt.solve(rhs);
  double residual = (gram * w - rhs).lpNorm<Eigen::Infinity>();
  double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (ldlt.info() != Eigen::Success || !w.allFinite() ||
      residual > 1e-9 * scale) {
    throw NumericError(
        "ridge_fit: singular or ill-conditioned system; use lambda > 0");
  }
  ExplanationWeights e;
  e.w = std::move(w);
  e.lambda = lambda;
  (void)k;
  return e;
}

Watermark binarize(const Vec& w) {
  Watermark wm;
  wm.bits.resize(w.size());
  for (long i = 0; i < w.size(); ++i) wm.bits[i] = w[i] >= 0.0 ? 1 : -1;
  return wm;
}

Watermark binarize(const ExplanationWeights& e) { return binarize(e.w); }

Mat extraction_jacobian(const Mat& masks, double lambda) {
  if (lambda < 0.0) throw ConfigError("ridge lambda must be >= 0");
  Mat gram = masks.transpose() * masks;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Mat> ldlt(gram);
  Mat a = ldlt.solve(masks.transpose());
  if (ldlt.info() != Eigen::Success || !a.allFinite())
    throw NumericError(
        "extraction_jacobian: singular system; use lambda > 0");
  return a;
}

Vec metric_vector(const BlackBox& model, const TriggerSample& trigger,
                  const MaskSet& masks, const BasicPartition& part,
                  MetricMode mode) {
  const int c = masks.c();
  Vec v(c);
  if (trigger.backend == Backend::kClassifier) {
    std::vector<Tensor> batch;
    batch.reserve(c);
    for (int i = 0; i < c; ++i)
      batch.push_back(apply_mask(trigger.input, masks.masks.row(i), part));
    auto outs = model.predict_batch(batch);
    for (int i = 0; i < c; ++i)
      v[i] = mode == MetricMode::kLogits
                 ? metric_classifier(outs[i], trigger.label)
                 : metric_label_only(outs[i], trigger.label);
  } else {
    if (mode == MetricMode::kLabelOnly)
      throw ConfigError("label-only extraction supports the classifier backend");
    if (trigger.target_positions.empty())
      throw DataError("LM trigger has no target positions");
    for (int i = 0; i < c; ++i) {
      std::vector<int> masked =
          apply_mask_tokens(trigger.tokens, masks.masks.row(i), part);
      // Query position-by-position with the true target restored so the
      // metric scores the original token under the masked context.
      std::vector<double> probs;
      probs.reserve(trigger.target_positions.size());
      for (int pos : trigger.target_positions) {
        std::vector<int> query = masked;
        query[pos] = trigger.tokens[pos];
        probs.push_back(model.lm_target_probs(query, {pos})[0]);
      }
      v[i] = metric_lm(probs);
    }
  }
  return v;
}

Watermark extract_watermark(const BlackBox& model, const TriggerSample& trigger,
                            const MaskSet& masks, const BasicPartition& part,
                            MetricMode mode, double lambda) {
  Vec v = metric_vector(model, trigger, masks, part, mode);
  ExplanationWeights e = ridge_fit(masks.masks, v, lambda);
  return binarize(e);
}

}  // namespace eaaw
