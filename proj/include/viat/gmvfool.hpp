#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "viat/classifier.hpp"
#include "viat/viewdist.hpp"

namespace viat {

/// Black-box class probabilities as a function of the viewpoint.
using ViewModel = std::function<VectorXd(const Viewpoint&)>;
/// Black-box scalar loss as a function of the viewpoint.
using ViewLoss = std::function<double(const Viewpoint&)>;

/// f(R(v)) for a fixed scene. Holds references: `params` and `scene` must
/// outlive the returned model.
ViewModel render_model(const ClassifierParams& params, const Scene& scene, const RenderConfig& render);

/// v -> -log p_label(v)
ViewLoss cross_entropy_loss(ViewModel model, int label);

/// Scaling applied to the classification-loss terms of the gradient.
///   kEuclidean: plain gradient of E[L] (what finite differences measure).
///   kNatural:   Fisher-preconditioned form with the sigma/omega factors
///               (L*sigma*r/omega, L*sigma*(r^2-1)/(2*omega)).
/// The entropy terms are identical in both.
enum class NesForm { kEuclidean, kNatural };

struct AttackConfig {
  int iterations = 50;
  int samples = 100;
  double eta = 0.05;
  int components = 15;
  double lambda = 0.01;
  std::uint64_t seed = 0;
  NesForm form = NesForm::kEuclidean;
  /// Subtract a per-component leave-one-out mean loss in the mu/sigma terms.
  /// The omega term always sees the raw loss.
  bool center_losses = true;
  /// Samples for the per-iteration entropy trace (0: same as `samples`).
  int entropy_samples = 0;

  void validate() const;
};

struct GradientEstimate {
  VectorXd d_omega;
  MatrixK6 d_mu;
  MatrixK6 d_sigma;
  double loss_mean = 0.0;

  static GradientEstimate zeros(int components);
};

/// Monte Carlo estimate of the ascent direction of E[L(v)] + lambda * H(p(v))
/// from q black-box loss queries.
GradientEstimate nes_gradient(const MixtureParams& params, const ViewBounds& bounds, const ViewLoss& loss,
                              int samples, double lambda, std::uint64_t seed, NesForm form = NesForm::kEuclidean,
                              bool center = false);

/// Same estimator, using caller-supplied draws and their losses.
GradientEstimate nes_gradient_from_draws(const MixtureParams& params, const ViewBounds& bounds,
                                         std::span<const DrawRecord> draws, std::span<const double> losses,
                                         double lambda, NesForm form = NesForm::kEuclidean, bool center = false);

/// Single-Gaussian estimator for (mu, sigma) given standard-normal draws r_j.
struct UnimodalGradient {
  Vector6d d_mu = Vector6d::Zero();
  Vector6d d_sigma = Vector6d::Zero();
};
UnimodalGradient unimodal_nes_gradient(const Vector6d& mu, const Vector6d& sigma, const ViewBounds& bounds,
                                       std::span<const Vector6d> r, std::span<const double> losses,
                                       double lambda);

struct AdamState {
  VectorXd m_omega, v_omega;
  MatrixK6 m_mu, v_mu, m_sigma, v_sigma;

  static AdamState zeros(int components);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamStep {
  MixtureParams params;
  AdamState state;
};

/// Bias-corrected Adam ascent step; `step_index` starts at 1.
AdamStep adam_update(const MixtureParams& params, const GradientEstimate& grad, double eta, int step_index,
                     const AdamState& state, const AdamConfig& adam = {});

/// Clamp weights to the floor and renormalize; clamp sigma to its floor.
/// All weights below the floor resets to uniform and sets *reset.
MixtureParams project_params(const MixtureParams& params, double omega_floor = kOmegaFloor,
                             double sigma_floor = kSigmaFloor, bool* reset = nullptr);

struct IterationLog {
  int iteration = 0;
  double loss_mean = 0.0;
  double entropy = 0.0;
  double max_omega = 0.0;
};

struct AttackResult {
  MixtureParams params;
  /// iterations + 1 rows; the last row evaluates the returned params.
  std::vector<IterationLog> trace;
};

/// Mixture attack loop: sample, query, estimate, Adam ascent, project.
/// Starts from `init` when given (warm start), else MixtureParams::initial.
AttackResult run_attack(const ViewLoss& loss, const ViewBounds& bounds, const AttackConfig& config,
                        const MixtureParams* init = nullptr);

AttackResult run_attack(const ClassifierParams& classifier, const Scene& scene, int label,
                        const ViewBounds& bounds, const RenderConfig& render, const AttackConfig& config,
                        const MixtureParams* init = nullptr);

/// Fraction of n viewpoints sampled from `params` whose argmax differs from `label`.
double attack_success_rate(const ViewModel& model, int label, const MixtureParams& params,
                           const ViewBounds& bounds, int n, std::uint64_t seed);

/// Baseline: uniformly sampled viewpoints inside the bounds.
double random_search_success_rate(const ViewModel& model, int label, const ViewBounds& bounds, int n,
                                  std::uint64_t seed);

/// CSV "iter,loss_mean,entropy,max_omega".
std::string trace_csv(std::span<const IterationLog> trace);

}  // namespace viat
