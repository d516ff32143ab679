#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "viat/geometry.hpp"

namespace viat {

enum class Shape { kSphere, kBox };

/// Piecewise-constant density/color primitive.
struct Primitive {
  Shape shape = Shape::kSphere;
  Vector3d center = Vector3d::Zero();
  /// Full edge lengths for boxes; unused for spheres.
  Vector3d size = Vector3d::Ones();
  double radius = 1.0;
  double density = 1.0;
  Vector3d color = Vector3d::Constant(0.5);

  bool contains(const Vector3d& x) const;
  /// Parametric entry/exit of the ray through the primitive's bounding volume,
  /// or nullopt when the ray misses it.
  std::optional<std::pair<double, double>> intersect(const Ray& ray) const;
};

struct Scene {
  std::vector<Primitive> primitives;
  Vector3d background = Vector3d::Zero();
  int label = 0;
  double near = 2.0;
  double far = 6.0;
  std::string name;
};

struct RenderedImage {
  int width = 0;
  int height = 0;
  /// Row-major interleaved RGB.
  VectorXd pixels;

  Vector3d pixel(int x, int y) const { return pixels.segment<3>(3 * (y * width + x)); }
};

enum class SampleMode { kJittered, kMidpoint };

struct RenderConfig {
  int width = 32;
  int height = 32;
  double fov = 40.0;
  int samples = 32;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::kJittered;
  Vector3d base_position = Vector3d(0.0, 4.0, 0.0);
};

/// One depth per stratum of [near, far]; strictly increasing.
std::vector<double> sample_points_stratified(double near, double far, int samples, std::uint64_t seed,
                                             SampleMode mode = SampleMode::kJittered);

/// Density-weighted color and total density at a point (overlaps add).
struct FieldSample {
  double density = 0.0;
  Vector3d color = Vector3d::Zero();
};
FieldSample evaluate_field(const Scene& scene, const Vector3d& x);

/// Discrete volume rendering along one ray, composited over the background
/// with the residual transmittance. If `transmittance` is non-null it
/// receives T(t_1) .. T(t_{M+1}).
Vector3d render_pixel(const Scene& scene, const Ray& ray, int samples, std::uint64_t seed,
                      SampleMode mode = SampleMode::kJittered, std::vector<double>* transmittance = nullptr);

RenderedImage render_image(const Scene& scene, const Viewpoint& v, const RenderConfig& config);

/// Throws ValidationError naming the offending field.
void validate_scene(const Scene& scene, int num_classes = -1);

Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& text, const std::string& origin = "<string>");
std::string dump_scene(const Scene& scene);
void save_scene(const Scene& scene, const std::filesystem::path& path);

/// All *.json scenes in a directory, sorted by filename.
std::vector<Scene> load_scene_dir(const std::filesystem::path& dir);

}  // namespace viat
