#include "viat/toy_suite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace viat {
namespace {

const std::array<Vector3d, 6> kPalette = {Vector3d(0.90, 0.20, 0.15), Vector3d(0.20, 0.75, 0.25),
                                          Vector3d(0.20, 0.35, 0.90), Vector3d(0.95, 0.85, 0.20),
                                          Vector3d(0.20, 0.85, 0.85), Vector3d(0.85, 0.30, 0.80)};

Primitive sphere(const Vector3d& c, double r, const Vector3d& color, double density) {
  Primitive p;
  p.shape = Shape::kSphere;
  p.center = c;
  p.radius = r;
  p.color = color;
  p.density = density;
  return p;
}

Primitive box(const Vector3d& c, const Vector3d& size, const Vector3d& color, double density) {
  Primitive p;
  p.shape = Shape::kBox;
  p.center = c;
  p.size = size;
  p.color = color;
  p.density = density;
  return p;
}

}  // namespace

std::vector<Scene> make_toy_suite(int classes, int objects_per_class, std::uint64_t seed) {
  if (classes < 1 || classes > 4) throw InvalidArgument("make_toy_suite: 1 to 4 classes supported");
  if (objects_per_class < 1) throw InvalidArgument("make_toy_suite: need at least one object per class");
  constexpr double kDensity = 10.0;
  static const char* kClassNames[] = {"rod", "plank", "tower", "tee"};

  std::vector<Scene> scenes;
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < objects_per_class; ++j) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c * 1000 + j)));
      std::uniform_real_distribution<double> scale_dist(0.85, 1.1);
      std::uniform_int_distribution<size_t> color_dist(0, kPalette.size() - 1);
      const double s = scale_dist(rng);
      const size_t body_idx = color_dist(rng);
      size_t accent_idx = color_dist(rng);
      while (accent_idx == body_idx) accent_idx = color_dist(rng);
      const Vector3d body = kPalette[body_idx];
      const Vector3d accent = kPalette[accent_idx];

      Scene scene;
      scene.label = c;
      scene.near = 1.5;
      scene.far = 7.0;
      scene.background = Vector3d(0.05, 0.05, 0.08);
      scene.name = std::string("class") + std::to_string(c) + "_" + kClassNames[c] + "_obj" + std::to_string(j);
      switch (c) {
        case 0:
          scene.primitives.push_back(box({0.0, 0.0, 0.0}, Vector3d(1.8, 0.3, 0.3) * s, body, kDensity));
          scene.primitives.push_back(sphere({0.9 * s, 0.0, 0.0}, 0.3 * s, accent, kDensity));
          break;
        case 1:
          scene.primitives.push_back(box({0.0, 0.0, 0.0}, Vector3d(0.3, 1.6, 0.3) * s, body, kDensity));
          scene.primitives.push_back(box({0.0, 0.8 * s, 0.0}, Vector3d(0.45, 0.45, 0.45) * s, accent, kDensity));
          break;
        case 2:
          scene.primitives.push_back(box({0.0, 0.0, 0.0}, Vector3d(0.4, 0.4, 1.4) * s, body, kDensity));
          scene.primitives.push_back(sphere({0.0, 0.0, 0.7 * s}, 0.28 * s, accent, kDensity));
          break;
        default:
          scene.primitives.push_back(box({0.0, 0.0, 0.0}, Vector3d(1.4, 0.3, 0.3) * s, body, kDensity));
          scene.primitives.push_back(box({0.0, 0.45 * s, 0.0}, Vector3d(0.3, 0.9, 0.3) * s, accent, kDensity));
          break;
      }
      scenes.push_back(std::move(scene));
    }
  }
  return scenes;
}

NaturalSampler toy_natural_sampler(int classes) {
  NaturalSampler sampler;
  for (int c = 0; c < classes; ++c) {
    sampler.class_nominal.push_back(Viewpoint(c == 1 ? 90.0 : 0.0, 0.0, 65.0, 0.0, 0.0, 0.0));
  }
  return sampler;
}

double PlantedLandscape::loss(const Viewpoint& v) const {
  double l = base;
  for (const PlantedBump& b : bumps) {
    double d2 = 0.0;
    for (int i = 0; i < 6; ++i) {
      if (b.width[i] <= 0.0) continue;
      const double z = (v[i] - b.center[i]) / b.width[i];
      d2 += z * z;
    }
    l += b.height * std::exp(-0.5 * d2);
  }
  return l;
}

VectorXd PlantedLandscape::probabilities(const Viewpoint& v) const {
  const double p = std::exp(-loss(v));
  VectorXd out(2);
  out << p, 1.0 - p;
  return out;
}

int PlantedLandscape::bump_of(const Viewpoint& v) const {
  for (size_t k = 0; k < bumps.size(); ++k) {
    double d2 = 0.0;
    for (int i = 0; i < 6; ++i) {
      if (bumps[k].width[i] <= 0.0) continue;
      const double z = (v[i] - bumps[k].center[i]) / bumps[k].width[i];
      d2 += z * z;
    }
    if (d2 <= membership_radius * membership_radius) return static_cast<int>(k);
  }
  return -1;
}

ViewBounds psi_phi_bounds() {
  Vector6d lo, hi;
  lo << -180.0, 0.0, 20.0, 0.0, 0.0, 0.0;
  hi << 180.0, 0.0, 160.0, 0.0, 0.0, 0.0;
  return {lo, hi};
}

namespace {

PlantedBump psi_phi_bump(double psi, double phi, double psi_width, double phi_width, double height) {
  PlantedBump b;
  b.center << psi, 0.0, phi, 0.0, 0.0, 0.0;
  b.width << psi_width, 0.0, phi_width, 0.0, 0.0, 0.0;
  b.height = height;
  return b;
}

}  // namespace

PlantedLandscape single_bump_landscape() {
  PlantedLandscape l;
  l.bumps.push_back(psi_phi_bump(60.0, 110.0, 40.0, 20.0, 3.0));
  return l;
}

PlantedLandscape four_bump_landscape() {
  PlantedLandscape l;
  l.bumps.push_back(psi_phi_bump(-110.0, 55.0, 30.0, 15.0, 3.0));
  l.bumps.push_back(psi_phi_bump(-35.0, 125.0, 30.0, 15.0, 3.0));
  l.bumps.push_back(psi_phi_bump(40.0, 60.0, 30.0, 15.0, 3.0));
  l.bumps.push_back(psi_phi_bump(115.0, 120.0, 30.0, 15.0, 3.0));
  return l;
}

std::vector<double> bump_mass(const PlantedLandscape& landscape, const MixtureParams& params,
                              const ViewBounds& bounds, int n, std::uint64_t seed) {
  std::vector<double> mass(landscape.bumps.size() + 1, 0.0);
  for (const DrawRecord& d : sample_mixture(params, bounds, n, seed)) {
    const int b = landscape.bump_of(d.v);
    mass[b < 0 ? landscape.bumps.size() : static_cast<size_t>(b)] += 1.0;
  }
  for (double& m : mass) m /= n;
  return mass;
}

int mode_coverage(std::span<const double> mass, double threshold) {
  int covered = 0;
  for (size_t i = 0; i + 1 < mass.size(); ++i) covered += mass[i] >= threshold ? 1 : 0;
  return covered;
}

std::vector<LandscapePoint> sweep_landscape(const ViewLoss& loss, const ViewBounds& bounds, int axis_x, int axis_y,
                                            int nx, int ny, const Viewpoint& fixed) {
  if (nx < 1 || ny < 1) throw InvalidArgument("sweep_landscape: grid must be non-empty");
  if (axis_x < 0 || axis_x > 5 || axis_y < 0 || axis_y > 5 || axis_x == axis_y) {
    throw InvalidArgument("sweep_landscape: need two distinct axes");
  }
  std::vector<LandscapePoint> grid;
  grid.reserve(static_cast<size_t>(nx * ny));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      Viewpoint v = fixed;
      v[axis_x] = bounds.lo()[axis_x] + (ix + 0.5) * (bounds.hi()[axis_x] - bounds.lo()[axis_x]) / nx;
      v[axis_y] = bounds.lo()[axis_y] + (iy + 0.5) * (bounds.hi()[axis_y] - bounds.lo()[axis_y]) / ny;
      grid.push_back({v[axis_x], v[axis_y], loss(v)});
    }
  }
  return grid;
}

}  // namespace viat
