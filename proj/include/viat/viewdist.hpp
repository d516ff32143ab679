#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "viat/geometry.hpp"

namespace viat {

using MatrixK6 = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr double kOmegaFloor = 1e-3;
inline constexpr double kSquashLimit = 15.0;

/// K-component diagonal Gaussian mixture over the pre-squash variable u.
struct MixtureParams {
  VectorXd omega;  // K
  MatrixK6 mu;     // K x 6
  MatrixK6 sigma;  // K x 6

  int components() const { return static_cast<int>(omega.size()); }

  /// Uniform weights, means uniform in [-1.5, 1.5]^6, sigma = 0.5.
  static MixtureParams initial(int components, std::uint64_t seed);
  /// Throws InvalidArgument when the simplex / floor invariants fail.
  void validate(const ViewBounds& bounds) const;

  friend bool operator==(const MixtureParams& a, const MixtureParams& b) {
    return a.omega == b.omega && a.mu == b.mu && a.sigma == b.sigma;
  }
};

struct DrawRecord {
  int component = 0;  // index of the one-hot gamma
  Vector6d r;
  Vector6d u;
  Viewpoint v;
};

/// v = a * tanh(u) + b
Viewpoint squash(const Vector6d& u, const ViewBounds& bounds);
/// Inverse of squash on non-frozen axes (frozen axes map to 0). Throws
/// DomainError at or beyond the bounds.
Vector6d unsquash(const Viewpoint& v, const ViewBounds& bounds);

/// u = mu_k + sigma_k * r for the draw's component.
Vector6d reparameterize(const MixtureParams& params, int component, const Vector6d& r);

std::vector<DrawRecord> sample_mixture(const MixtureParams& params, const ViewBounds& bounds, int n,
                                       std::uint64_t seed);

/// log p(v) including the tanh change-of-variables Jacobian; frozen axes are
/// marginalized out.
double log_density_v(const MixtureParams& params, const ViewBounds& bounds, const Viewpoint& v);

/// log p(u) of the mixture restricted to the active axes, and its gradient
/// with respect to u (zero on frozen axes).
double log_density_u(const MixtureParams& params, const ViewBounds& bounds, const Vector6d& u,
                     Vector6d* grad_u = nullptr);

/// sum_i log(a_i (1 - tanh^2 u_i)) over active axes, evaluated stably.
double log_jacobian(const ViewBounds& bounds, const Vector6d& u);

struct EntropyEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

EntropyEstimate entropy_estimate(const MixtureParams& params, const ViewBounds& bounds, int samples,
                                 std::uint64_t seed);

/// Structured-text dump {K, omega, mu, sigma, bounds}.
std::string dump_mixture(const MixtureParams& params, const ViewBounds& bounds);
MixtureParams parse_mixture(const std::string& text, ViewBounds* bounds = nullptr);

}  // namespace viat
