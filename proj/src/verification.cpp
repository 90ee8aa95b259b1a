#include "eaaw/verification.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "eaaw/rng.hpp"

namespace eaaw {

double wsr(const Watermark& extracted, const Watermark& original) {
  if (extracted.k() != original.k())
    throw DimensionError("wsr: watermark lengths differ");
  long match = 0;
  for (int i = 0; i < extracted.k(); ++i)
    if (extracted.bits[i] == original.bits[i]) ++match;
  return static_cast<double>(match) / static_cast<double>(extracted.k());
}

double log_sf_chi2_1df(double x) {
  if (x < 0.0) throw NumericError("log_sf_chi2_1df: x must be >= 0");
  // P(chi2_1 >= x) = erfc(sqrt(x/2))
  const double z = std::sqrt(x / 2.0);
  const double ln10 = std::numbers::ln10;
  if (z <= 6.0) return std::log(std::erfc(z)) / ln10;
  // Asymptotic expansion: erfc(z) ~ e^{-z^2}/(z sqrt(pi)) *
  //   sum_n (-1)^n (2n-1)!! / (2 z^2)^n, truncated at the smallest term.
  const double inv2z2 = 1.0 / (2.0 * z * z);
  double term = 1.0, sum = 1.0, prev_mag = 1.0;
  for (int n = 1; n < 200; ++n) {
    term *= -(2.0 * n - 1.0) * inv2z2;
    if (std::abs(term) >= prev_mag) break;  // series started diverging
    sum += term;
    prev_mag = std::abs(term);
    if (prev_mag < 1e-19) break;
  }
  double ln_p =
      -z * z - std::log(z * std::sqrt(std::numbers::pi)) + std::log(sum);
  return ln_p / ln10;
}

std::pair<double, double> chi_squared_log_p(const Watermark& extracted,
                                            const Watermark& original) {
  if (extracted.k() != original.k())
    throw DimensionError("chi_squared: watermark lengths differ");
  original.validate();  // requires both signs and k >= 8
  const long n = extracted.k();
  long a = 0, b = 0, c = 0, d = 0;  // (e,o): (+,+), (+,-), (-,+), (-,-)
  for (int i = 0; i < n; ++i) {
    bool e = extracted.bits[i] == 1;
    bool o = original.bits[i] == 1;
    if (e && o)
      ++a;
    else if (e && !o)
      ++b;
    else if (!e && o)
      ++c;
    else
      ++d;
  }
  double r1 = static_cast<double>(a + b), r2 = static_cast<double>(c + d);
  double c1 = static_cast<double>(a + c), c2 = static_cast<double>(b + d);
  double chi2 = 0.0;
  // A zero marginal leaves empty expected cells; the 0^2/0 -> 0 convention
  // makes the statistic vanish.
  if (r1 > 0.0 && r2 > 0.0 && c1 > 0.0 && c2 > 0.0) {
    double det = static_cast<double>(a) * d - static_cast<double>(b) * c;
    chi2 = static_cast<double>(n) * det * det / (r1 * r2 * c1 * c2);
  }
  return {chi2, log_sf_chi2_1df(chi2)};
}

std::string VerificationReport::csv_header() {
  return "k,wsr,chi2,log10_p,alpha,decision";
}

std::string VerificationReport::csv_row() const {
  std::ostringstream os;
  os.precision(12);
  os << k << "," << wsr << "," << chi2 << "," << log10_p << "," << alpha << ","
     << (decision ? 1 : 0);
  return os.str();
}

std::string VerificationReport::text_block() const {
  std::ostringstream os;
  os.precision(6);
  os << "watermark length : " << k << "\n"
     << "WSR              : " << wsr << "\n"
     << "chi-squared      : " << chi2 << "\n"
     << "log10 p-value    : " << log10_p << "\n"
     << "alpha            : " << alpha << "\n"
     << "decision         : " << (decision ? "OWNED (H0 rejected)" : "NOT VERIFIED")
     << "\n";
  return os.str();
}

VerificationReport make_report(const Watermark& extracted,
                               const Watermark& original, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw ConfigError("alpha must lie in (0,1)");
  VerificationReport r;
  r.k = original.k();
  r.wsr = wsr(extracted, original);
  auto [chi2, log10_p] = chi_squared_log_p(extracted, original);
  r.chi2 = chi2;
  r.log10_p = log10_p;
  r.alpha = alpha;
  r.decision = log10_p <= std::log10(alpha);
  for (int i = 0; i < original.k(); ++i) {
    int e = extracted.bits[i] == 1 ? 1 : 0;
    int o = original.bits[i] == 1 ? 1 : 0;
    ++r.counts[e][o];
  }
  return r;
}

VerificationReport verify(const BlackBox& model, const TriggerSample& trigger,
                          const MaskSet& masks, const BasicPartition& part,
                          const Watermark& original, double alpha,
                          MetricMode mode, double lambda) {
  Watermark extracted =
      extract_watermark(model, trigger, masks, part, mode, lambda);
  return make_report(extracted, original, alpha);
}

double harmless_degree(const BlackBox& model, const ClassifierDataset& test,
                       const std::vector<TriggerSample>& triggers) {
  if (test.size() == 0 && triggers.empty())
    throw DataError("harmless_degree: empty union");
  long correct = 0, total = 0;
  if (test.size() > 0) {
    auto outs = model.predict_batch(test.x);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (outs[i].predicted == test.y[i]) ++correct;
      ++total;
    }
  }
  for (const auto& t : triggers) {
    if (t.backend != Backend::kClassifier)
      throw DataError("harmless_degree: classifier triggers required");
    auto out = model.predict_batch({t.input});
    if (out[0].predicted == t.label) ++correct;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

AmbiguityResult ambiguity_monte_carlo(const BlackBox& model,
                                      const Watermark& target, int input_dim,
                                      int classes, int trials,
                                      std::uint64_t seed, double alpha,
                                      double lambda) {
  if (trials < 100) throw ConfigError("ambiguity_monte_carlo: trials >= 100");
  const int k = target.k();
  BasicPartition part = segment_input(input_dim, k);
  MaskSet masks = generate_masks(k, k, MaskScheme::kLeaveOneOut, 0);
  Rng rng(seed);
  AmbiguityResult res;
  res.trials = trials;
  res.best_log10_p = 0.0;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    TriggerSample forged;
    forged.backend = Backend::kClassifier;
    forged.input = Tensor({input_dim});
    for (int i = 0; i < input_dim; ++i) forged.input[i] = rng.normal();
    forged.label = rng.uniform_int(classes);
    Watermark extracted = extract_watermark(model, forged, masks, part,
                                            MetricMode::kLogits, lambda);
    VerificationReport r = make_report(extracted, target, alpha);
    res.wsrs.push_back(r.wsr);
    sum += r.wsr;
    if (r.decision) ++res.trials_passing;
    if (r.log10_p < res.best_log10_p) res.best_log10_p = r.log10_p;
  }
  res.mean_wsr = sum / trials;
  return res;
}

}  // namespace eaaw
