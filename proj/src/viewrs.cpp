#include "viat/viewrs.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "viat/parallel.hpp"

namespace viat {

void SmoothingConfig::validate() const {
  if (!(sigma_tilde > 0.0)) throw InvalidArgument("SmoothingConfig: sigma_tilde must be > 0");
  if (n0 < 1 || n < n0) throw InvalidArgument("SmoothingConfig: need n >= n0 >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("SmoothingConfig: alpha must lie in (0, 1)");
}

SmoothedCounts smoothed_predict(const ViewModel& model, int num_classes, const ViewBounds& bounds,
                                const Viewpoint& v0, double sigma_tilde, int n, std::uint64_t seed) {
  if (num_classes < 1) throw InvalidArgument("smoothed_predict: num_classes must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma_tilde);
  const Vector6d a = bounds.half_width();

  std::vector<Viewpoint> views(static_cast<size_t>(n));
  SmoothedCounts out;
  out.counts.assign(static_cast<size_t>(num_classes), 0);
  out.total = n;
  for (Viewpoint& v : views) {
    Vector6d eps;
    for (int i = 0; i < 6; ++i) eps[i] = normal(rng);
    const Vector6d raw = v0.params + a.cwiseProduct(eps);
    v.params = raw.cwiseMax(bounds.lo()).cwiseMin(bounds.hi());
    if (v.params != raw) ++out.clipped;
  }

  std::vector<int> predicted(views.size());
  parallel_for(n, [&](int j) {
    Eigen::Index best;
    model(views[static_cast<size_t>(j)]).maxCoeff(&best);
    predicted[static_cast<size_t>(j)] = static_cast<int>(best);
  });
  for (int c : predicted) {
    if (c < 0 || c >= num_classes) throw InvalidArgument("smoothed_predict: model returned too many classes");
    ++out.counts[static_cast<size_t>(c)];
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("normal_quantile: p outside [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  // Acklam's rational approximation (relative error ~1e-9).
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement against the erfc-based CDF.
  const double e = (x < 0.0 ? 0.5 * std::erfc(-x / std::sqrt(2.0)) - p : (0.5 - p) + 0.5 * std::erf(x / std::sqrt(2.0)));
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double clopper_pearson_lower(int k, int n, double alpha) {
  if (n < 1 || k < 0 || k > n) throw InvalidArgument("clopper_pearson_lower: need 0 <= k <= n, n >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("clopper_pearson_lower: alpha must lie in (0, 1)");
  if (k == 0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1), alpha);
}

double gaussian_l2_radius(double sigma_tilde, double p_a, double p_b) {
  return 0.5 * sigma_tilde * (normal_quantile(p_a) - normal_quantile(p_b));
}

double uniform_l1_radius(double beta, double p_a, double p_b) { return beta * (p_a - p_b); }

CertificationRecord make_record(int top_class, double pA_lower, double sigma_tilde, int label) {
  CertificationRecord rec;
  rec.pA_lower = pA_lower;
  if (pA_lower > 0.5) {
    rec.predicted = top_class;
    // With p_B = 1 - p_A the Gaussian bound collapses to sigma * Phi^-1(p_A).
    rec.radius = sigma_tilde * normal_quantile(pA_lower);
  }
  rec.correct = rec.predicted != kAbstain && rec.predicted == label;
  return rec;
}

CertificationRecord certify(const ViewModel& model, int num_classes, int label, const ViewBounds& bounds,
                            const SmoothingConfig& config) {
  config.validate();
  const SmoothedCounts selection =
      smoothed_predict(model, num_classes, bounds, config.v0, config.sigma_tilde, config.n0, derive_seed(config.seed, 0));
  int top = 0;
  for (int c = 1; c < num_classes; ++c) {
    if (selection.counts[static_cast<size_t>(c)] > selection.counts[static_cast<size_t>(top)]) top = c;
  }
  const SmoothedCounts estimate =
      smoothed_predict(model, num_classes, bounds, config.v0, config.sigma_tilde, config.n, derive_seed(config.seed, 1));
  const double p_lower = clopper_pearson_lower(estimate.counts[static_cast<size_t>(top)], config.n, config.alpha);
  CertificationRecord rec = make_record(top, p_lower, config.sigma_tilde, label);
  rec.clip_fraction = static_cast<double>(estimate.clipped) / estimate.total;
  return rec;
}

AcrCa aggregate_acr_ca(std::span<const CertificationRecord> records) {
  if (records.empty()) throw InvalidArgument("aggregate_acr_ca: no records");
  AcrCa out;
  for (const auto& r : records) {
    if (r.correct) {
      out.acr += r.radius;
      out.ca += 1.0;
    }
  }
  out.acr /= static_cast<double>(records.size());
  out.ca /= static_cast<double>(records.size());
  return out;
}

}  // namespace viat
