#pragma once

#include "eaaw/model.hpp"
#include "eaaw/watermark.hpp"

namespace eaaw {

enum class MetricMode { kLogits, kLabelOnly };

// Predicted probability of the ground-truth class.
double metric_classifier(const PredictOutput& out, int label);
// 1.0 iff the predicted class equals the label; argmax ties break low.
double metric_label_only(const PredictOutput& out, int label);
// Arithmetic mean of target-token probabilities.
double metric_lm(const std::vector<double>& target_probs);

struct ExplanationWeights {
  Vec w;
  double lambda = 0.0;
};

// w = (M^T M + lambda I_k)^{-1} M^T v via an SPD solve.
ExplanationWeights ridge_fit(const Mat& masks, const Vec& v, double lambda);

// Sign pattern of the explanation; w_i >= 0 maps to +1.
Watermark binarize(const ExplanationWeights& e);
Watermark binarize(const Vec& w);

// The constant operator A = (M^T M + lambda I)^{-1} M^T with A v ==
// ridge_fit(masks, v, lambda).
Mat extraction_jacobian(const Mat& masks, double lambda);

// Per-mask metric values of the black-box model on the masked trigger.
Vec metric_vector(const BlackBox& model, const TriggerSample& trigger,
                  const MaskSet& masks, const BasicPartition& part,
                  MetricMode mode);

Watermark extract_watermark(const BlackBox& model, const TriggerSample& trigger,
                            const MaskSet& masks, const BasicPartition& part,
                            MetricMode mode, double lambda);

// Default mask count for label-only extraction (random masks, c = 16k).
inline constexpr int kLabelOnlyMaskFactor = 16;
inline constexpr double kDefaultRidgeLambda = 1.0;

}  // namespace eaaw
