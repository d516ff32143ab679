#include "viat/gmvfool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "viat/parallel.hpp"

namespace viat {

ViewModel render_model(const ClassifierParams& params, const Scene& scene, const RenderConfig& render) {
  return [&params, &scene, render](const Viewpoint& v) { return forward(params, render_image(scene, v, render).pixels); };
}

ViewLoss cross_entropy_loss(ViewModel model, int label) {
  return [model = std::move(model), label](const Viewpoint& v) { return cross_entropy(model(v), label); };
}

void AttackConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("AttackConfig: iterations must be >= 1");
  if (samples < 1) throw InvalidArgument("AttackConfig: samples must be >= 1");
  if (!(eta > 0.0)) throw InvalidArgument("AttackConfig: eta must be > 0");
  if (components < 1) throw InvalidArgument("AttackConfig: components must be >= 1");
  if (!(lambda >= 0.0)) throw InvalidArgument("AttackConfig: lambda must be >= 0");
  if (entropy_samples < 0) throw InvalidArgument("AttackConfig: entropy_samples must be >= 0");
}

GradientEstimate GradientEstimate::zeros(int components) {
  GradientEstimate g;
  g.d_omega = VectorXd::Zero(components);
  g.d_mu = MatrixK6::Zero(components, 6);
  g.d_sigma = MatrixK6::Zero(components, 6);
  return g;
}

GradientEstimate nes_gradient_from_draws(const MixtureParams& params, const ViewBounds& bounds,
                                         std::span<const DrawRecord> draws, std::span<const double> losses,
                                         double lambda, NesForm form, bool center) {
  if (draws.empty() || draws.size() != losses.size()) throw InvalidArgument("nes_gradient: need one loss per draw");
  GradientEstimate g = GradientEstimate::zeros(params.components());
  // Per-component loss sums for the leave-one-out baseline.
  std::vector<double> k_sum(static_cast<size_t>(params.components()), 0.0);
  std::vector<int> k_count(static_cast<size_t>(params.components()), 0);
  if (center) {
    for (size_t j = 0; j < draws.size(); ++j) {
      k_sum[static_cast<size_t>(draws[j].component)] += losses[j];
      ++k_count[static_cast<size_t>(draws[j].component)];
    }
  }

  for (size_t j = 0; j < draws.size(); ++j) {
    const DrawRecord& d = draws[j];
    const int k = d.component;
    const size_t ks = static_cast<size_t>(k);
    // The baseline excludes draw j itself, so E[(L - b) r] = E[L r].
    double loss = losses[j];
    if (center && k_count[ks] > 1) loss -= (k_sum[ks] - losses[j]) / (k_count[ks] - 1);
    // The 1/omega factor is floored; a collapsed component would otherwise
    // give unbounded variance.
    const double omega = std::max(params.omega[k], kOmegaFloor);

    g.d_omega[k] += losses[j] / omega - lambda;
    for (int i = 0; i < 6; ++i) {
      if (bounds.frozen(i)) continue;
      const double s = params.sigma(k, i);
      const double r = d.r[i];
      const double th = std::tanh(d.u[i]);
      double loss_mu, loss_sigma;
      if (form == NesForm::kEuclidean) {
        loss_mu = loss * (r / s);
        loss_sigma = loss * ((r * r - 1.0) / s);
      } else {
        loss_mu = loss * s * r / omega;
        loss_sigma = loss * s * (r * r - 1.0) / (2.0 * omega);
      }
      // Entropy terms: d/dmu log(1 - tanh^2 u) = -2 tanh(u), and
      // d/dsigma [log sigma + log(1 - tanh^2(mu + sigma r))]
      //   = (1 - 2 sigma r tanh(u)) / sigma.
      g.d_mu(k, i) += loss_mu - 2.0 * lambda * th;
      g.d_sigma(k, i) += loss_sigma + lambda * ((1.0 - 2.0 * s * r * th) / s);
    }
    g.loss_mean += losses[j];
  }
  const double q = static_cast<double>(draws.size());
  g.d_omega /= q;
  g.d_mu /= q;
  g.d_sigma /= q;
  g.loss_mean /= q;
  return g;
}

GradientEstimate nes_gradient(const MixtureParams& params, const ViewBounds& bounds, const ViewLoss& loss,
                              int samples, double lambda, std::uint64_t seed, NesForm form, bool center) {
  if (samples < 1) throw InvalidArgument("nes_gradient: need at least one sample");
  const auto draws = sample_mixture(params, bounds, samples, seed);
  std::vector<double> losses(draws.size());
  parallel_for(samples, [&](int j) { losses[static_cast<size_t>(j)] = loss(draws[static_cast<size_t>(j)].v); });
  return nes_gradient_from_draws(params, bounds, draws, losses, lambda, form, center);
}

UnimodalGradient unimodal_nes_gradient(const Vector6d& mu, const Vector6d& sigma, const ViewBounds& bounds,
                                       std::span<const Vector6d> r, std::span<const double> losses,
                                       double lambda) {
  if (r.empty() || r.size() != losses.size()) throw InvalidArgument("unimodal_nes_gradient: need one loss per draw");
  UnimodalGradient g;
  const Vector6d active = Vector6d::NullaryExpr([&](Eigen::Index i) { return bounds.frozen(static_cast<int>(i)) ? 0.0 : 1.0; });
  for (size_t j = 0; j < r.size(); ++j) {
    const Vector6d u = mu + sigma.cwiseProduct(r[j]);
    const Vector6d th = u.array().tanh();
    g.d_mu += losses[j] * r[j].cwiseQuotient(sigma) - 2.0 * lambda * th;
    g.d_sigma += losses[j] * (r[j].array().square() - 1.0).matrix().cwiseQuotient(sigma) +
                 lambda * (1.0 - 2.0 * sigma.array() * r[j].array() * th.array()).matrix().cwiseQuotient(sigma);
  }
  const double q = static_cast<double>(r.size());
  g.d_mu = g.d_mu.cwiseProduct(active) / q;
  g.d_sigma = g.d_sigma.cwiseProduct(active) / q;
  return g;
}

AdamState AdamState::zeros(int components) {
  AdamState s;
  s.m_omega = s.v_omega = VectorXd::Zero(components);
  s.m_mu = s.v_mu = s.m_sigma = s.v_sigma = MatrixK6::Zero(components, 6);
  return s;
}

namespace {

template <typename Param, typename Moment>
void adam_apply(Param& param, const Param& grad, Moment& m, Moment& v, double eta, int t, const AdamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  param.array() += eta * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace

AdamStep adam_update(const MixtureParams& params, const GradientEstimate& grad, double eta, int step_index,
                     const AdamState& state, const AdamConfig& adam) {
  if (step_index < 1) throw InvalidArgument("adam_update: step index starts at 1");
  const int k = params.components();
  if (grad.d_omega.size() != k || state.m_omega.size() != k || state.m_mu.rows() != k) {
    throw InvalidArgument("adam_update: state dimensions do not match params");
  }
  AdamStep out{params, state};
  adam_apply(out.params.omega, grad.d_omega, out.state.m_omega, out.state.v_omega, eta, step_index, adam);
  adam_apply(out.params.mu, grad.d_mu, out.state.m_mu, out.state.v_mu, eta, step_index, adam);
  adam_apply(out.params.sigma, grad.d_sigma, out.state.m_sigma, out.state.v_sigma, eta, step_index, adam);
  return out;
}

MixtureParams project_params(const MixtureParams& params, double omega_floor, double sigma_floor, bool* reset) {
  if (!params.omega.allFinite() || !params.mu.allFinite() || !params.sigma.allFinite()) {
    throw InvalidArgument("project_params: non-finite parameters");
  }
  MixtureParams p = params;
  const int k = p.components();
  if (reset) *reset = false;
  if ((p.omega.array() < omega_floor).all()) {
    std::clog << "viat: all mixture weights fell below the floor; resetting to uniform\n";
    p.omega = VectorXd::Constant(k, 1.0 / k);
    if (reset) *reset = true;
  } else {
    p.omega = p.omega.cwiseMax(omega_floor);
    p.omega /= p.omega.sum();
  }
  p.sigma = p.sigma.cwiseMax(sigma_floor);
  return p;
}

AttackResult run_attack(const ViewLoss& loss, const ViewBounds& bounds, const AttackConfig& config,
                        const MixtureParams* init) {
  config.validate();
  AttackResult result;
  result.params = init ? *init : MixtureParams::initial(config.components, derive_seed(config.seed, 0x1417));
  result.params = project_params(result.params);
  const int k = result.params.components();
  AdamState state = AdamState::zeros(k);
  const int entropy_q = config.entropy_samples > 0 ? config.entropy_samples : config.samples;

  auto log_row = [&](int t, double loss_mean) {
    const auto h = entropy_estimate(result.params, bounds, entropy_q, derive_seed(config.seed, 0xE0000 + t));
    result.trace.push_back({t, loss_mean, h.value, result.params.omega.maxCoeff()});
  };

  for (int t = 0; t < config.iterations; ++t) {
    const GradientEstimate g = nes_gradient(result.params, bounds, loss, config.samples, config.lambda,
                                            derive_seed(config.seed, static_cast<std::uint64_t>(t)), config.form,
                                            config.center_losses);
    log_row(t, g.loss_mean);
    AdamStep step = adam_update(result.params, g, config.eta, t + 1, state);
    state = std::move(step.state);
    result.params = project_params(step.params);
  }

  // Final row: loss of the returned distribution.
  const auto draws = sample_mixture(result.params, bounds, config.samples,
                                    derive_seed(config.seed, static_cast<std::uint64_t>(config.iterations)));
  std::vector<double> losses(draws.size());
  parallel_for(config.samples, [&](int j) { losses[static_cast<size_t>(j)] = loss(draws[static_cast<size_t>(j)].v); });
  double mean = 0.0;
  for (double l : losses) mean += l;
  log_row(config.iterations, mean / config.samples);
  return result;
}

AttackResult run_attack(const ClassifierParams& classifier, const Scene& scene, int label,
                        const ViewBounds& bounds, const RenderConfig& render, const AttackConfig& config,
                        const MixtureParams* init) {
  return run_attack(cross_entropy_loss(render_model(classifier, scene, render), label), bounds, config, init);
}

namespace {

int argmax(const VectorXd& p) {
  Eigen::Index best;
  p.maxCoeff(&best);
  return static_cast<int>(best);
}

double misclassified_fraction(const ViewModel& model, int label, std::span<const Viewpoint> views) {
  std::vector<int> wrong(views.size(), 0);
  parallel_for(static_cast<int>(views.size()),
               [&](int j) { wrong[static_cast<size_t>(j)] = argmax(model(views[static_cast<size_t>(j)])) != label; });
  int total = 0;
  for (int w : wrong) total += w;
  return static_cast<double>(total) / static_cast<double>(views.size());
}

}  // namespace

double attack_success_rate(const ViewModel& model, int label, const MixtureParams& params,
                           const ViewBounds& bounds, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("attack_success_rate: n must be >= 1");
  std::vector<Viewpoint> views;
  views.reserve(static_cast<size_t>(n));
  for (const DrawRecord& d : sample_mixture(params, bounds, n, seed)) views.push_back(d.v);
  return misclassified_fraction(model, label, views);
}

double random_search_success_rate(const ViewModel& model, int label, const ViewBounds& bounds, int n,
                                  std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_search_success_rate: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Viewpoint> views(static_cast<size_t>(n));
  for (Viewpoint& v : views) {
    for (int i = 0; i < 6; ++i) {
      std::uniform_real_distribution<double> unif(bounds.lo()[i], bounds.hi()[i]);
      v[i] = bounds.frozen(i) ? bounds.lo()[i] : unif(rng);
    }
  }
  return misclassified_fraction(model, label, views);
}

std::string trace_csv(std::span<const IterationLog> trace) {
  std::ostringstream out;
  out << "iter,loss_mean,entropy,max_omega\n";
  char buf[160];
  for (const IterationLog& row : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", row.iteration, row.loss_mean, row.entropy,
                  row.max_omega);
    out << buf;
  }
  return out.str();
}

}  // namespace viat
