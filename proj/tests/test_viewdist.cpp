#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "viat/viewdist.hpp"

#include "oracles.hpp"

using namespace viat;
using namespace viat::oracle;

namespace {

ViewBounds one_axis_bounds(double lo_v, double hi_v) {
  Vector6d lo = Vector6d::Zero(), hi = Vector6d::Zero();
  lo[kPhi] = lo_v;
  hi[kPhi] = hi_v;
  return {lo, hi};
}

double normal_logpdf(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * std::log(2 * kPi);
}

}  // namespace

TEST_CASE("squash examples") {
  const ViewBounds b = ViewBounds::standard();
  const Viewpoint v0 = squash(Vector6d::Zero(), b);
  CHECK(v0[kPsi] == 0.0);
  CHECK(v0[kPhi] == 90.0);
  const Viewpoint v10 = squash(Vector6d::Constant(10.0), b);
  for (int i = 0; i < 6; ++i) CHECK(v10[i] > 0.9999 * b.half_width()[i] + b.center()[i]);
  CHECK(b.contains(squash(Vector6d::Constant(1e6), b)));
  CHECK(b.contains(squash(Vector6d::Constant(-1e6), b)));
}

TEST_CASE("unsquash inverts squash") {
  const ViewBounds b = ViewBounds::standard();
  for (double x : {-5.0, -2.3, -0.1, 0.0, 0.7, 4.9}) {
    Vector6d u = Vector6d::Constant(x);
    u[1] = -x / 2;
    CHECK((unsquash(squash(u, b), b) - u).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(unsquash(Viewpoint(180, 0, 90, 0, 0, 0), b), DomainError);
  CHECK_THROWS_AS(unsquash(Viewpoint(0, 0, 10, 0, 0, 0), b), DomainError);
}

TEST_CASE("sampling examples") {
  const ViewBounds b = ViewBounds::standard();
  SUBCASE("degenerate weights") {
    MixtureParams p = MixtureParams::initial(3, 1);
    p.omega << 1.0, 0.0, 0.0;
    for (const auto& d : sample_mixture(p, b, 2000, 4)) REQUIRE(d.component == 0);
  }
  SUBCASE("balanced weights") {
    MixtureParams p = MixtureParams::initial(2, 1);
    int first = 0;
    const int n = 100000;
    for (const auto& d : sample_mixture(p, b, n, 8)) first += d.component == 0;
    CHECK(first / double(n) >= 0.49);
    CHECK(first / double(n) <= 0.51);
  }
  SUBCASE("vanishing noise") {
    MixtureParams p = MixtureParams::initial(1, 2);
    p.sigma.setConstant(kSigmaFloor);
    const Viewpoint center = squash(p.mu.row(0).transpose(), b);
    for (const auto& d : sample_mixture(p, b, 500, 3)) REQUIRE((d.v.params - center.params).cwiseAbs().maxCoeff() < 0.05);
  }
  SUBCASE("records are consistent and inside the box") {
    MixtureParams p = MixtureParams::initial(4, 9);
    p.sigma.setConstant(6.0);
    const auto draws = sample_mixture(p, b, 5000, 12);
    for (const auto& d : draws) {
      REQUIRE(reparameterize(p, d.component, d.r) == d.u);
      REQUIRE(b.contains(d.v));
      for (int i = 0; i < 6; ++i) {
        REQUIRE(d.v[i] > b.lo()[i]);
        REQUIRE(d.v[i] < b.hi()[i]);
      }
    }
    const auto again = sample_mixture(p, b, 5000, 12);
    for (size_t j = 0; j < draws.size(); ++j) REQUIRE(again[j].v == draws[j].v);
  }
  SUBCASE("frozen axes are pinned") {
    const ViewBounds f = b.with_frozen(kTheta, 7.5);
    for (const auto& d : sample_mixture(MixtureParams::initial(2, 0), f, 200, 1)) REQUIRE(d.v[kTheta] == 7.5);
  }
}

TEST_CASE("initial params") {
  const MixtureParams p = MixtureParams::initial(15, 3);
  CHECK(p.omega.isApprox(VectorXd::Constant(15, 1.0 / 15)));
  CHECK(p.sigma.isApproxToConstant(0.5));
  CHECK(p.mu.cwiseAbs().maxCoeff() <= 1.5);
  CHECK_NOTHROW(p.validate(ViewBounds::standard()));
  MixtureParams bad = p;
  bad.omega[0] += 0.1;
  CHECK_THROWS_AS(bad.validate(ViewBounds::standard()), InvalidArgument);
  bad = p;
  bad.sigma(2, 3) = 1e-6;
  CHECK_THROWS_AS(bad.validate(ViewBounds::standard()), InvalidArgument);
}

TEST_CASE("log density at the mode of a standard normal") {
  MixtureParams p;
  p.omega = VectorXd::Ones(1);
  p.mu = MatrixK6::Zero(1, 6);
  p.sigma = MatrixK6::Ones(1, 6);
  Vector6d lo, hi;
  lo << -180, -30, -70, -0.5, -1, -0.5;
  hi = -lo;
  const ViewBounds b(lo, hi);
  const double expected = -6 * 0.5 * std::log(2 * kPi) - hi.array().log().sum();
  CHECK(std::abs(log_density_v(p, b, Viewpoint()) - expected) < 1e-12);
  CHECK_THROWS_AS(log_density_v(p, b, Viewpoint(180, 0, 0, 0, 0, 0)), DomainError);
}

TEST_CASE("density integrates to one on two active axes") {
  const ViewBounds b = two_axis_bounds();
  const double mass = cell_mass(three_component(), b, -180, 180, 20, 160, 1200);
  CHECK(std::abs(mass - 1.0) < 1e-3);
}

TEST_CASE("histogram of samples matches the density") {
  const ViewBounds b = two_axis_bounds();
  const MixtureParams p = three_component();
  const int n = 1000000, nx = 24, ny = 14;
  std::vector<int> counts(nx * ny, 0);
  for (const auto& d : sample_mixture(p, b, n, 2024)) {
    const int ix = std::min(nx - 1, int((d.v[kPsi] + 180) / 360 * nx));
    const int iy = std::min(ny - 1, int((d.v[kPhi] - 20) / 140 * ny));
    ++counts[iy * nx + ix];
  }
  int checked = 0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int c = counts[iy * nx + ix];
      if (c < 1000) continue;
      const double x0 = -180 + 360.0 * ix / nx, y0 = 20 + 140.0 * iy / ny;
      const double mass = cell_mass(p, b, x0, x0 + 360.0 / nx, y0, y0 + 140.0 / ny, 12);
      // 5% relative, widened to 4 Poisson standard deviations for sparse bins.
      const double tol = std::max(0.05 * mass, 4.0 * std::sqrt(mass / n));
      CHECK(std::abs(c / double(n) - mass) <= tol);
      if (c >= 10000) CHECK(std::abs(c / double(n) - mass) <= 0.05 * mass);
      ++checked;
    }
  CHECK(checked > 20);
}

TEST_CASE("separated components scale with their weights") {
  const ViewBounds b = two_axis_bounds();
  MixtureParams p;
  p.omega = Eigen::Vector2d(0.7, 0.3);
  p.mu = MatrixK6::Zero(2, 6);
  p.sigma = MatrixK6::Constant(2, 6, 0.05);
  p.mu(0, kPsi) = -1.0;
  p.mu(1, kPsi) = 1.0;
  MixtureParams single;
  single.omega = VectorXd::Ones(1);
  single.mu = p.mu.topRows(1);
  single.sigma = p.sigma.topRows(1);
  for (int k = 0; k < 2; ++k) {
    single.mu = p.mu.row(k);
    const Viewpoint v = squash(p.mu.row(k).transpose(), b);
    CHECK(std::exp(log_density_v(p, b, v)) == doctest::Approx(p.omega[k] * std::exp(log_density_v(single, b, v))).epsilon(1e-9));
  }
}

TEST_CASE("frozen axes drop out of the density") {
  const ViewBounds full = ViewBounds::standard();
  const ViewBounds part = full.with_frozen(kDy, 0.0);
  MixtureParams p = MixtureParams::initial(1, 5);
  p.sigma.row(0) << 0.4, 0.6, 0.5, 0.3, 0.7, 0.9;
  const Viewpoint v(30, -5, 70, 0.1, 0.0, -0.2);
  const Vector6d u = unsquash(v, full);
  const double axis_term = normal_logpdf(u[kDy], p.mu(0, kDy), p.sigma(0, kDy)) -
                           std::log(full.half_width()[kDy] * (1 - std::pow(std::tanh(u[kDy]), 2)));
  CHECK(std::abs(log_density_v(p, full, v) - axis_term - log_density_v(p, part, v)) < 1e-10);
}

TEST_CASE("entropy matches a quadrature oracle") {
  // One active axis. H = -E[log p(v)] integrated in u with the change of
  // variables written out independently: log p(v) = log N(u) - log(a sech^2 u).
  const ViewBounds b = one_axis_bounds(20, 160);
  const double a = 70.0;
  for (double sigma : {0.2, 0.9, 3.0}) {
    MixtureParams p;
    p.omega = VectorXd::Ones(1);
    p.mu = MatrixK6::Zero(1, 6);
    p.mu(0, kPhi) = 0.3;
    p.sigma = MatrixK6::Constant(1, 6, sigma);
    const int n = 200000;
    const double lo = 0.3 - 12 * sigma, hi = 0.3 + 12 * sigma, du = (hi - lo) / n;
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = lo + (i + 0.5) * du;
      const double log_sech2 = 2 * std::log(2.0) - 2 * std::abs(u) - 2 * std::log1p(std::exp(-2 * std::abs(u)));
      const double lq = normal_logpdf(u, 0.3, sigma);
      h -= std::exp(lq) * (lq - std::log(a) - log_sech2) * du;
    }
    const EntropyEstimate e = entropy_estimate(p, b, 40000, 17);
    CHECK(std::abs(e.value - h) < 3 * e.std_error);
    // The uniform density is the maximum-entropy law on the interval.
    CHECK(h < std::log(140.0));
  }
}

TEST_CASE("widening sigma does not approach the uniform entropy") {
  // A wide Gaussian in u piles mass at the interval ends after the squash, so
  // the entropy peaks at moderate sigma and then falls.
  const ViewBounds b = one_axis_bounds(20, 160);
  auto entropy_at = [&](double sigma) {
    MixtureParams p;
    p.omega = VectorXd::Ones(1);
    p.mu = MatrixK6::Zero(1, 6);
    p.sigma = MatrixK6::Constant(1, 6, sigma);
    return entropy_estimate(p, b, 20000, 5).value;
  };
  const double h1 = entropy_at(0.9), h10 = entropy_at(10.0), h100 = entropy_at(100.0);
  CHECK(h1 < std::log(140.0));
  CHECK(h1 > std::log(140.0) - 0.1);
  CHECK(h10 < h1);
  CHECK(h100 < h10);
}

TEST_CASE("entropy shrinks with sigma") {
  const ViewBounds b = ViewBounds::standard();
  MixtureParams p = MixtureParams::initial(1, 6);
  MixtureParams q = p;
  q.sigma /= 10.0;
  CHECK(entropy_estimate(p, b, 10000, 1).value > entropy_estimate(q, b, 10000, 1).value);
  // log-scale: ten times narrower per axis costs about 6 log 10 nats.
  CHECK(entropy_estimate(p, b, 10000, 1).value - entropy_estimate(q, b, 10000, 1).value > 5 * std::log(10.0));
}

TEST_CASE("mixture dump round-trips bit-exactly") {
  MixtureParams p = MixtureParams::initial(5, 99);
  p.omega << 0.1, 0.2, 0.3, 0.15, 0.25;
  p.sigma(3, 2) = 1.0 / 3.0;
  const ViewBounds b = ViewBounds::standard().with_frozen(kDz, 0.25);
  ViewBounds back = ViewBounds::standard();
  const MixtureParams r = parse_mixture(dump_mixture(p, b), &back);
  CHECK(r == p);
  CHECK(back == b);
  CHECK_THROWS_AS(parse_mixture("{\"K\": 2}"), ParseError);
  CHECK_THROWS_AS(parse_mixture("not json"), ParseError);
}
