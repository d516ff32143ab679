#include "viat/viewdist.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace viat {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double log1mtanh2(double u) {
  // log(1 - tanh^2 u) = log sech^2 u = 2 log 2 - 2|u| - 2 log(1 + e^{-2|u|})
  const double au = std::abs(u);
  return 2.0 * std::log(2.0) - 2.0 * au - 2.0 * std::log1p(std::exp(-2.0 * au));
}

}  // namespace

MixtureParams MixtureParams::initial(int components, std::uint64_t seed) {
  if (components < 1) throw InvalidArgument("MixtureParams::initial: need at least one component");
  MixtureParams p;
  p.omega = VectorXd::Constant(components, 1.0 / components);
  p.mu.resize(components, 6);
  p.sigma = MatrixK6::Constant(components, 6, 0.5);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int k = 0; k < components; ++k)
    for (int i = 0; i < 6; ++i) p.mu(k, i) = unif(rng);
  return p;
}

void MixtureParams::validate(const ViewBounds& bounds) const {
  const int k = components();
  if (k < 1) throw InvalidArgument("MixtureParams: no components");
  if (mu.rows() != k || sigma.rows() != k) throw InvalidArgument("MixtureParams: shape mismatch");
  if (!omega.allFinite() || !mu.allFinite() || !sigma.allFinite()) throw InvalidArgument("MixtureParams: non-finite entry");
  if ((omega.array() < 0.0).any() || (omega.array() > 1.0).any()) throw InvalidArgument("MixtureParams: weight outside [0, 1]");
  if (std::abs(omega.sum() - 1.0) > 1e-9) throw InvalidArgument("MixtureParams: weights do not sum to one");
  for (int i = 0; i < 6; ++i) {
    if (bounds.frozen(i)) continue;
    if (sigma.col(i).minCoeff() < kSigmaFloor) throw InvalidArgument("MixtureParams: sigma below floor");
  }
}

Viewpoint squash(const Vector6d& u, const ViewBounds& bounds) {
  // tanh(15) = 1 - 1.9e-13 keeps v representably inside the open box.
  const Vector6d t = u.cwiseMax(-kSquashLimit).cwiseMin(kSquashLimit).array().tanh().matrix();
  const Vector6d v = bounds.half_width().cwiseProduct(t) + bounds.center();
  return Viewpoint(v.cwiseMax(bounds.lo()).cwiseMin(bounds.hi()));
}

Vector6d unsquash(const Viewpoint& v, const ViewBounds& bounds) {
  Vector6d u = Vector6d::Zero();
  const Vector6d a = bounds.half_width();
  const Vector6d b = bounds.center();
  for (int i = 0; i < 6; ++i) {
    if (bounds.frozen(i)) continue;
    const double s = (v[i] - b[i]) / a[i];
    if (!(s > -1.0 && s < 1.0)) {
      throw DomainError("unsquash: viewpoint on or outside the bounds on axis " +
                        std::string(kAxisNames[static_cast<size_t>(i)]));
    }
    u[i] = std::atanh(s);
  }
  return u;
}

Vector6d reparameterize(const MixtureParams& params, int component, const Vector6d& r) {
  return params.mu.row(component).transpose() + params.sigma.row(component).transpose().cwiseProduct(r);
}

std::vector<DrawRecord> sample_mixture(const MixtureParams& params, const ViewBounds& bounds, int n,
                                       std::uint64_t seed) {
  std::vector<DrawRecord> draws(static_cast<size_t>(std::max(n, 0)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k_count = params.components();
  for (DrawRecord& d : draws) {
    const double x = bits_to_open_unit(rng());
    double acc = 0.0;
    d.component = k_count - 1;
    for (int k = 0; k < k_count; ++k) {
      acc += params.omega[k];
      if (x < acc) {
        d.component = k;
        break;
      }
    }
    // Guard against rounding in the cumulative sum selecting a zero-weight tail.
    while (params.omega[d.component] <= 0.0 && d.component > 0) --d.component;
    for (int i = 0; i < 6; ++i) d.r[i] = normal(rng);
    d.u = reparameterize(params, d.component, d.r);
    d.v = squash(d.u, bounds);
  }
  return draws;
}

double log_jacobian(const ViewBounds& bounds, const Vector6d& u) {
  const Vector6d a = bounds.half_width();
  double s = 0.0;
  for (int i = 0; i < 6; ++i) {
    if (bounds.frozen(i)) continue;
    s += std::log(a[i]) + log1mtanh2(u[i]);
  }
  return s;
}

double log_density_u(const MixtureParams& params, const ViewBounds& bounds, const Vector6d& u,
                     Vector6d* grad_u) {
  const int k_count = params.components();
  VectorXd log_terms(k_count);
  for (int k = 0; k < k_count; ++k) {
    double lt = std::log(params.omega[k]);
    for (int i = 0; i < 6; ++i) {
      if (bounds.frozen(i)) continue;
      const double s = params.sigma(k, i);
      const double z = (u[i] - params.mu(k, i)) / s;
      lt += -0.5 * z * z - std::log(s) - kHalfLog2Pi;
    }
    log_terms[k] = lt;
  }
  const double m = log_terms.maxCoeff();
  if (!std::isfinite(m)) {
    if (grad_u) grad_u->setZero();
    return m;
  }
  const VectorXd w = (log_terms.array() - m).exp();
  const double total = w.sum();
  if (grad_u) {
    grad_u->setZero();
    for (int k = 0; k < k_count; ++k) {
      const double resp = w[k] / total;
      for (int i = 0; i < 6; ++i) {
        if (bounds.frozen(i)) continue;
        const double s = params.sigma(k, i);
        (*grad_u)[i] -= resp * (u[i] - params.mu(k, i)) / (s * s);
      }
    }
  }
  return m + std::log(total);
}

double log_density_v(const MixtureParams& params, const ViewBounds& bounds, const Viewpoint& v) {
  const Vector6d u = unsquash(v, bounds);
  return log_density_u(params, bounds, u) - log_jacobian(bounds, u);
}

EntropyEstimate entropy_estimate(const MixtureParams& params, const ViewBounds& bounds, int samples,
                                 std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("entropy_estimate: need at least one sample");
  const auto draws = sample_mixture(params, bounds, samples, seed);
  // Evaluate in u-space: v is a deterministic bijection of u on active axes,
  // and going through u avoids atanh round-off once tanh saturates.
  double sum = 0.0, sum_sq = 0.0;
  for (const DrawRecord& d : draws) {
    const double nll = -(log_density_u(params, bounds, d.u) - log_jacobian(bounds, d.u));
    sum += nll;
    sum_sq += nll * nll;
  }
  const double n = samples;
  EntropyEstimate e;
  e.value = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * e.value * e.value) / (n - 1.0)) : 0.0;
  e.std_error = std::sqrt(var / n);
  return e;
}

std::string dump_mixture(const MixtureParams& params, const ViewBounds& bounds) {
  using nlohmann::json;
  const int k_count = params.components();
  json j;
  j["K"] = k_count;
  j["omega"] = std::vector<double>(params.omega.data(), params.omega.data() + k_count);
  json mu = json::array(), sigma = json::array();
  for (int k = 0; k < k_count; ++k) {
    std::vector<double> m(6), s(6);
    for (int i = 0; i < 6; ++i) {
      m[static_cast<size_t>(i)] = params.mu(k, i);
      s[static_cast<size_t>(i)] = params.sigma(k, i);
    }
    mu.push_back(m);
    sigma.push_back(s);
  }
  j["mu"] = mu;
  j["sigma"] = sigma;
  j["bounds"] = {{"lo", std::vector<double>(bounds.lo().data(), bounds.lo().data() + 6)},
                 {"hi", std::vector<double>(bounds.hi().data(), bounds.hi().data() + 6)}};
  return j.dump(1);
}

MixtureParams parse_mixture(const std::string& text, ViewBounds* bounds) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("mixture dump: ") + e.what());
  }
  try {
    const int k_count = j.at("K").get<int>();
    const auto omega = j.at("omega").get<std::vector<double>>();
    const auto mu = j.at("mu").get<std::vector<std::vector<double>>>();
    const auto sigma = j.at("sigma").get<std::vector<std::vector<double>>>();
    if (k_count < 1 || omega.size() != static_cast<size_t>(k_count) || mu.size() != omega.size() ||
        sigma.size() != omega.size()) {
      throw ValidationError("K", "component count does not match array lengths");
    }
    MixtureParams p;
    p.omega = Eigen::Map<const VectorXd>(omega.data(), k_count);
    p.mu.resize(k_count, 6);
    p.sigma.resize(k_count, 6);
    for (int k = 0; k < k_count; ++k) {
      const auto& mk = mu[static_cast<size_t>(k)];
      const auto& sk = sigma[static_cast<size_t>(k)];
      if (mk.size() != 6 || sk.size() != 6) throw ValidationError("mu/sigma", "rows must have 6 entries");
      for (int i = 0; i < 6; ++i) {
        p.mu(k, i) = mk[static_cast<size_t>(i)];
        p.sigma(k, i) = sk[static_cast<size_t>(i)];
      }
    }
    if (bounds) {
      const auto lo = j.at("bounds").at("lo").get<std::vector<double>>();
      const auto hi = j.at("bounds").at("hi").get<std::vector<double>>();
      if (lo.size() != 6 || hi.size() != 6) throw ValidationError("bounds", "expected 6 entries");
      *bounds = ViewBounds(Eigen::Map<const Vector6d>(lo.data()), Eigen::Map<const Vector6d>(hi.data()));
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("mixture dump: ") + e.what());
  }
}

}  // namespace viat
