#include "viat/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace viat {

bool Primitive::contains(const Vector3d& x) const {
  if (shape == Shape::kSphere) return (x - center).squaredNorm() <= radius * radius;
  return ((x - center).cwiseAbs().array() <= (size / 2.0).array()).all();
}

std::optional<std::pair<double, double>> Primitive::intersect(const Ray& ray) const {
  if (shape == Shape::kSphere) {
    const Vector3d oc = ray.origin - center;
    const double b = oc.dot(ray.direction);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    return std::pair{-b - s, -b + s};
  }
  // slab test
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const Vector3d half = size / 2.0;
  for (int i = 0; i < 3; ++i) {
    const double lo = center[i] - half[i] - ray.origin[i];
    const double hi = center[i] + half[i] - ray.origin[i];
    if (ray.direction[i] == 0.0) {
      if (lo > 0.0 || hi < 0.0) return std::nullopt;
      continue;
    }
    double a = lo / ray.direction[i];
    double b = hi / ray.direction[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return std::nullopt;
  return std::pair{t0, t1};
}

std::vector<double> sample_points_stratified(double near, double far, int samples, std::uint64_t seed,
                                             SampleMode mode) {
  if (samples < 1) throw InvalidArgument("sample_points_stratified: need at least one sample");
  if (!(near < far)) throw InvalidArgument("sample_points_stratified: near must be below far");

  std::vector<double> t(static_cast<size_t>(samples));
  const double width = (far - near) / samples;
  for (int m = 0; m < samples; ++m) {
    const double offset =
        mode == SampleMode::kMidpoint ? 0.5 : bits_to_open_unit(derive_seed(seed, static_cast<std::uint64_t>(m)));
    t[static_cast<size_t>(m)] = near + (m + offset) * width;
  }
  return t;
}

FieldSample evaluate_field(const Scene& scene, const Vector3d& x) {
  FieldSample out;
  for (const Primitive& p : scene.primitives) {
    if (p.density > 0.0 && p.contains(x)) {
      out.density += p.density;
      out.color += p.density * p.color;
    }
  }
  if (out.density > 0.0) out.color /= out.density;
  return out;
}

Vector3d render_pixel(const Scene& scene, const Ray& ray, int samples, std::uint64_t seed, SampleMode mode,
                      std::vector<double>* transmittance) {
  const std::vector<double> t = sample_points_stratified(scene.near, scene.far, samples, seed, mode);

  // Depth range where any primitive has support; outside it the density is
  // identically zero and the samples leave T unchanged.
  double hull_lo = std::numeric_limits<double>::infinity();
  double hull_hi = -std::numeric_limits<double>::infinity();
  for (const Primitive& p : scene.primitives) {
    if (p.density <= 0.0) continue;
    if (auto hit = p.intersect(ray)) {
      hull_lo = std::min(hull_lo, hit->first);
      hull_hi = std::max(hull_hi, hit->second);
    }
  }

  if (transmittance) {
    transmittance->clear();
    transmittance->reserve(t.size() + 1);
  }

  Vector3d color = Vector3d::Zero();
  double optical_depth = 0.0;
  for (size_t m = 0; m < t.size(); ++m) {
    const double trans = std::exp(-optical_depth);
    if (transmittance) transmittance->push_back(trans);
    if (t[m] < hull_lo || t[m] > hull_hi) continue;

    const FieldSample f = evaluate_field(scene, ray.at(t[m]));
    if (f.density <= 0.0) continue;
    const double delta = (m + 1 < t.size() ? t[m + 1] : scene.far) - t[m];
    const double tau_delta = f.density * delta;
    color += trans * (1.0 - std::exp(-tau_delta)) * f.color;
    optical_depth += tau_delta;
  }
  const double residual = std::exp(-optical_depth);
  if (transmittance) transmittance->push_back(residual);
  return color + residual * scene.background;
}

RenderedImage render_image(const Scene& scene, const Viewpoint& v, const RenderConfig& config) {
  const CameraPose pose = camera_pose_from_viewpoint(v, config.base_position);

  RenderedImage img;
  img.width = config.width;
  img.height = config.height;
  img.pixels.resize(3 * config.width * config.height);
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x) {
      const int idx = y * config.width + x;
      const Ray ray = pixel_ray(pose, x, y, config.width, config.height, config.fov);
      const Vector3d c = render_pixel(scene, ray, config.samples,
                                      derive_seed(config.seed, static_cast<std::uint64_t>(idx)), config.mode);
      img.pixels.segment<3>(3 * idx) = c.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return img;
}

}  // namespace viat
