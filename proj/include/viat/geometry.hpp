#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include <Eigen/Geometry>

#include "viat/common.hpp"

namespace viat {

/// Axis order of the 6-D viewpoint vector.
enum Axis : int { kPsi = 0, kTheta = 1, kPhi = 2, kDx = 3, kDy = 4, kDz = 5 };

inline constexpr std::array<std::string_view, 6> kAxisNames = {"psi", "theta", "phi",
                                                               "dx",  "dy",    "dz"};

/// Camera viewpoint [psi, theta, phi, dx, dy, dz]. Angles in degrees,
/// translations in scene units.
struct Viewpoint {
  Vector6d params = Vector6d::Zero();

  Viewpoint() = default;
  explicit Viewpoint(const Vector6d& p) : params(p) {}
  Viewpoint(double psi, double theta, double phi, double dx, double dy, double dz) {
    params << psi, theta, phi, dx, dy, dz;
  }

  double psi() const { return params[kPsi]; }
  double theta() const { return params[kTheta]; }
  double phi() const { return params[kPhi]; }
  Vector3d translation() const { return params.tail<3>(); }
  double operator[](int i) const { return params[i]; }
  double& operator[](int i) { return params[i]; }

  friend bool operator==(const Viewpoint& a, const Viewpoint& b) { return a.params == b.params; }
};

/// Box constraints on the viewpoint. Axes with lo == hi are frozen.
class ViewBounds {
 public:
  ViewBounds(const Vector6d& lo, const Vector6d& hi);

  /// psi in [-180, 180], theta in [-30, 30], phi in [20, 160],
  /// dx in [-0.5, 0.5], dy in [-1, 1], dz in [-0.5, 0.5].
  static ViewBounds standard();

  const Vector6d& lo() const { return lo_; }
  const Vector6d& hi() const { return hi_; }
  /// a = (hi - lo) / 2
  Vector6d half_width() const { return (hi_ - lo_) / 2.0; }
  /// b = (hi + lo) / 2
  Vector6d center() const { return (hi_ + lo_) / 2.0; }
  bool frozen(int axis) const { return lo_[axis] == hi_[axis]; }
  int active_axes() const;
  bool contains(const Viewpoint& v) const;

  /// Copy of these bounds with the given axis pinned to `value`.
  ViewBounds with_frozen(int axis, double value) const;

  friend bool operator==(const ViewBounds& a, const ViewBounds& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  Vector6d lo_;
  Vector6d hi_;
};

/// Camera-to-world rotation (columns: right, up, backward) and center.
struct CameraPose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d position = Vector3d::Zero();

  Vector3d right() const { return rotation.col(0); }
  Vector3d up() const { return rotation.col(1); }
  Vector3d forward() const { return -rotation.col(2); }
};

struct Ray {
  Vector3d origin;
  Vector3d direction;

  Vector3d at(double t) const { return origin + t * direction; }
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_z(Scalar deg) {
  return Eigen::AngleAxis<Scalar>(deg2rad(deg), Eigen::Matrix<Scalar, 3, 1>::UnitZ())
      .toRotationMatrix();
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_y(Scalar deg) {
  return Eigen::AngleAxis<Scalar>(deg2rad(deg), Eigen::Matrix<Scalar, 3, 1>::UnitY())
      .toRotationMatrix();
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_x(Scalar deg) {
  return Eigen::AngleAxis<Scalar>(deg2rad(deg), Eigen::Matrix<Scalar, 3, 1>::UnitX())
      .toRotationMatrix();
}

/// Intrinsic z-y-x Tait-Bryan rotation Rz(psi) * Ry(theta) * Rx(phi), degrees in.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_from_tait_bryan(Scalar psi, Scalar theta, Scalar phi) {
  using std::isfinite;
  if (!isfinite(psi) || !isfinite(theta) || !isfinite(phi)) {
    throw InvalidArgument("rotation_from_tait_bryan: non-finite angle");
  }
  return rotation_z(psi) * rotation_y(theta) * rotation_x(phi);
}

/// World-space camera center and look-at-origin orientation for `v`.
/// The base position is rotated first, then translated.
CameraPose camera_pose_from_viewpoint(const Viewpoint& v,
                                      const Vector3d& base_position = Vector3d(0.0, 4.0, 0.0));

/// Unit ray through the center of pixel (px, py) of a symmetric pinhole
/// frustum with vertical field of view `fov_deg`. Row 0 is the top row.
Ray pixel_ray(const CameraPose& pose, int px, int py, int width, int height, double fov_deg);

}  // namespace viat
