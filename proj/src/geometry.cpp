#include "viat/geometry.hpp"

#include <string>

namespace viat {

ViewBounds::ViewBounds(const Vector6d& lo, const Vector6d& hi) : lo_(lo), hi_(hi) {
  for (int i = 0; i < 6; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
      throw InvalidArgument("ViewBounds: invalid interval on axis " +
                            std::string(kAxisNames[static_cast<size_t>(i)]));
    }
  }
}

ViewBounds ViewBounds::standard() {
  Vector6d lo, hi;
  lo << -180.0, -30.0, 20.0, -0.5, -1.0, -0.5;
  hi << 180.0, 30.0, 160.0, 0.5, 1.0, 0.5;
  return {lo, hi};
}

int ViewBounds::active_axes() const {
  int n = 0;
  for (int i = 0; i < 6; ++i) n += frozen(i) ? 0 : 1;
  return n;
}

bool ViewBounds::contains(const Viewpoint& v) const {
  return ((v.params.array() >= lo_.array()) && (v.params.array() <= hi_.array())).all();
}

ViewBounds ViewBounds::with_frozen(int axis, double value) const {
  Vector6d lo = lo_, hi = hi_;
  lo[axis] = value;
  hi[axis] = value;
  return {lo, hi};
}

CameraPose camera_pose_from_viewpoint(const Viewpoint& v, const Vector3d& base_position) {
  if (!v.params.allFinite()) throw InvalidArgument("camera_pose_from_viewpoint: non-finite viewpoint");

  CameraPose pose;
  pose.position = rotation_from_tait_bryan(v.psi(), v.theta(), v.phi()) * base_position + v.translation();

  const double dist = pose.position.norm();
  if (dist < 1e-9) throw DegeneratePose("camera position coincides with the look-at target");

  const Vector3d forward = -pose.position / dist;
  Vector3d up_hint = Vector3d::UnitZ();
  if (forward.cross(up_hint).norm() < 1e-9) up_hint = Vector3d::UnitX();

  const Vector3d right = forward.cross(up_hint).normalized();
  const Vector3d up = right.cross(forward);
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = up;
  pose.rotation.col(2) = -forward;
  return pose;
}

Ray pixel_ray(const CameraPose& pose, int px, int py, int width, int height, double fov_deg) {
  if (width <= 0 || height <= 0) throw InvalidArgument("pixel_ray: empty image");
  if (px < 0 || px >= width || py < 0 || py >= height) throw InvalidArgument("pixel_ray: pixel index out of range");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw InvalidArgument("pixel_ray: fov must lie in (0, 180)");

  const double tan_half = std::tan(deg2rad(fov_deg) / 2.0);
  const double aspect = static_cast<double>(width) / height;
  const double sx = (2.0 * (px + 0.5) / width - 1.0) * tan_half * aspect;
  const double sy = (1.0 - 2.0 * (py + 0.5) / height) * tan_half;

  Ray ray;
  ray.origin = pose.position;
  ray.direction = (sx * pose.right() + sy * pose.up() + pose.forward()).normalized();
  return ray;
}

}  // namespace viat
