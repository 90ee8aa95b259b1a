#pragma once

#include <array>
#include <string>

#include "eaaw/extraction.hpp"

namespace eaaw {

// Fraction of matching bits.
double wsr(const Watermark& extracted, const Watermark& original);

// Pearson chi-squared (2x2 contingency over per-bit pairs, 1 df, no
// continuity correction). Returns (chi2, log10 p).
std::pair<double, double> chi_squared_log_p(const Watermark& extracted,
                                            const Watermark& original);

// log10 P(chi2_1 >= x), computed in the log domain (never underflows).
double log_sf_chi2_1df(double x);

struct VerificationReport {
  int k = 0;
  double wsr = 0.0;
  double chi2 = 0.0;
  double log10_p = 0.0;
  double alpha = 0.01;
  bool decision = false;
  // counts[ee][oo]: ee/oo = 0 for -1, 1 for +1
  std::array<std::array<long, 2>, 2> counts{};

  std::string csv_row() const;
  static std::string csv_header();
  std::string text_block() const;
};

inline constexpr double kDefaultAlpha = 0.01;

VerificationReport verify(const BlackBox& model, const TriggerSample& trigger,
                          const MaskSet& masks, const BasicPartition& part,
                          const Watermark& original,
                          double alpha = kDefaultAlpha,
                          MetricMode mode = MetricMode::kLogits,
                          double lambda = kDefaultRidgeLambda);

VerificationReport make_report(const Watermark& extracted,
                               const Watermark& original, double alpha);

// Accuracy over benign test set plus trigger set against ground truth.
double harmless_degree(const BlackBox& model, const ClassifierDataset& test,
                       const std::vector<TriggerSample>& triggers);

struct AmbiguityResult {
  double mean_wsr = 0.0;
  int trials = 0;
  int trials_passing = 0;  // trials with p <= alpha
  double best_log10_p = 0.0;
  std::vector<double> wsrs;
};

// Proposition-2 style Monte-Carlo: random forged triggers against a fixed
// target watermark on a (watermarked) model.
AmbiguityResult ambiguity_monte_carlo(const BlackBox& model,
                                      const Watermark& target, int input_dim,
                                      int classes, int trials,
                                      std::uint64_t seed,
                                      double alpha = kDefaultAlpha,
                                      double lambda = kDefaultRidgeLambda);

}  // namespace eaaw
