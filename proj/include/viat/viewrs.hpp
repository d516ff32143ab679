#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "viat/gmvfool.hpp"

namespace viat {

inline constexpr int kAbstain = -1;

/// Gaussian smoothing over normalized viewpoint parameters.
struct SmoothingConfig {
  double sigma_tilde = 0.1;
  int n = 1000;
  int n0 = 100;
  double alpha = 1e-3;
  Viewpoint v0{0.0, 0.0, 65.0, 0.0, 0.0, 0.0};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SmoothedCounts {
  std::vector<int> counts;  // per class
  int clipped = 0;          // samples with at least one axis clipped to the bounds
  int total = 0;
};

/// Argmax histogram of the base model under v = v0 + a * eps, eps ~ N(0, sigma^2 I),
/// clipped to the bounds.
SmoothedCounts smoothed_predict(const ViewModel& model, int num_classes, const ViewBounds& bounds,
                                const Viewpoint& v0, double sigma_tilde, int n, std::uint64_t seed);

/// Standard normal CDF and its inverse (rational approximation refined by
/// one Halley step).
double normal_cdf(double x);
double normal_quantile(double p);

/// Exact one-sided (1 - alpha) lower confidence bound for a binomial
/// proportion, i.e. the alpha quantile of Beta(k, n - k + 1).
double clopper_pearson_lower(int k, int n, double alpha);

/// ||xi||_2 <= sigma/2 * (Phi^-1(pA) - Phi^-1(pB)) for Gaussian smoothing.
double gaussian_l2_radius(double sigma_tilde, double p_a, double p_b);
/// ||xi||_1 <= beta * (pA - pB) for uniform smoothing on [-beta, beta].
double uniform_l1_radius(double beta, double p_a, double p_b);

struct CertificationRecord {
  int predicted = kAbstain;
  double pA_lower = 0.0;
  double radius = 0.0;
  bool correct = false;
  double clip_fraction = 0.0;
};

/// Record from a lower bound: abstain iff pA_lower <= 1/2, else radius sigma * Phi^-1(pA_lower).
CertificationRecord make_record(int top_class, double pA_lower, double sigma_tilde, int label);

/// Two-phase certification: n0 samples pick the top class, n fresh samples
/// bound its probability.
CertificationRecord certify(const ViewModel& model, int num_classes, int label, const ViewBounds& bounds,
                            const SmoothingConfig& config);

struct AcrCa {
  double acr = 0.0;
  double ca = 0.0;
};

/// Mean radius over all records with wrong/abstaining ones counting 0; CA is the
/// fraction certified correct.
AcrCa aggregate_acr_ca(std::span<const CertificationRecord> records);

}  // namespace viat
