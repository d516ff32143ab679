#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "viat/gmvfool.hpp"

namespace viat {

/// Bundled test world: `classes` x `objects_per_class` scenes built from
/// spheres and boxes. Each class has its own shape signature; colors are
/// drawn from a palette shared by all classes so color alone does not
/// identify the class.
std::vector<Scene> make_toy_suite(int classes = 4, int objects_per_class = 4, std::uint64_t seed = 2024);

/// Natural views for the toy suite: each class is photographed broadside to
/// its long horizontal axis from 65 deg elevation. The plank (long axis y)
/// is therefore seen from psi = 90; the others from psi = 0.
NaturalSampler toy_natural_sampler(int classes = 4);

/// Synthetic loss surface: base + sum of Gaussian bumps in viewpoint space.
struct PlantedBump {
  Vector6d center = Vector6d::Zero();  // viewpoint units
  Vector6d width = Vector6d::Ones();   // per-axis scale; <= 0 ignores the axis
  double height = 3.0;
};

struct PlantedLandscape {
  std::vector<PlantedBump> bumps;
  double base = 0.05;
  /// Samples within this normalized distance of a center belong to that bump.
  double membership_radius = 2.0;

  double loss(const Viewpoint& v) const;
  /// Two-class model with p(true) = exp(-loss); class 0 is the true class.
  VectorXd probabilities(const Viewpoint& v) const;
  /// Index of the bump containing v, or -1.
  int bump_of(const Viewpoint& v) const;
};

/// Bounds with only psi and phi active (theta and translations frozen at 0).
ViewBounds psi_phi_bounds();

PlantedLandscape single_bump_landscape();
PlantedLandscape four_bump_landscape();

/// Mass per bump of n samples from `params`; the final slot counts samples
/// outside every bump.
std::vector<double> bump_mass(const PlantedLandscape& landscape, const MixtureParams& params,
                              const ViewBounds& bounds, int n, std::uint64_t seed);

/// Number of bumps holding at least `threshold` of the mass.
int mode_coverage(std::span<const double> mass, double threshold = 0.05);

struct LandscapePoint {
  double x = 0.0;
  double y = 0.0;
  double loss = 0.0;
};

/// Loss on an nx x ny grid of cell centers over two axes; other axes stay at
/// `fixed`.
std::vector<LandscapePoint> sweep_landscape(const ViewLoss& loss, const ViewBounds& bounds, int axis_x, int axis_y,
                                            int nx, int ny, const Viewpoint& fixed = {});

}  // namespace viat
