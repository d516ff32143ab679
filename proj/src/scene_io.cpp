#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "viat/io.hpp"
#include "viat/render.hpp"

namespace viat {
namespace {

using nlohmann::json;

Vector3d read_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(field, "expected an array of 3 numbers");
  Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<size_t>(i)].is_number()) throw ValidationError(field, "expected an array of 3 numbers");
    v[i] = j[static_cast<size_t>(i)].get<double>();
  }
  return v;
}

double read_number(const json& j, const char* key, const std::string& field) {
  if (!j.contains(key)) throw ValidationError(field, "missing");
  if (!j.at(key).is_number()) throw ValidationError(field, "expected a number");
  return j.at(key).get<double>();
}

void check_color(const Vector3d& c, const std::string& field) {
  if (!c.allFinite() || (c.array() < 0.0).any() || (c.array() > 1.0).any()) {
    throw ValidationError(field, "color components must lie in [0, 1]");
  }
}

json vec_json(const Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

void validate_scene(const Scene& scene, int num_classes) {
  if (!(scene.near > 0.0)) throw ValidationError("near", "must be positive");
  if (!(scene.near < scene.far)) throw ValidationError("far", "must exceed near");
  if (scene.label < 0 || (num_classes > 0 && scene.label >= num_classes)) {
    throw ValidationError("label", "out of range");
  }
  check_color(scene.background, "background");
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& p = scene.primitives[i];
    const std::string prefix = "primitives[" + std::to_string(i) + "]";
    if (!std::isfinite(p.density) || p.density < 0.0) throw ValidationError(prefix + ".density", "must be >= 0");
    check_color(p.color, prefix + ".color");
    if (!p.center.allFinite()) throw ValidationError(prefix + ".center", "non-finite");
    if (p.shape == Shape::kSphere && !(p.radius > 0.0)) throw ValidationError(prefix + ".radius", "must be positive");
    if (p.shape == Shape::kBox && !(p.size.array() > 0.0).all()) throw ValidationError(prefix + ".size", "must be positive");
  }
}

Scene parse_scene(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(origin + ": top level must be an object");

  Scene scene;
  if (j.contains("name")) scene.name = j.at("name").get<std::string>();
  if (j.contains("background")) scene.background = read_vec3(j.at("background"), "background");
  if (j.contains("label")) {
    if (!j.at("label").is_number_integer()) throw ValidationError("label", "expected an integer");
    scene.label = j.at("label").get<int>();
  }
  if (j.contains("near")) scene.near = read_number(j, "near", "near");
  if (j.contains("far")) scene.far = read_number(j, "far", "far");

  if (!j.contains("primitives") || !j.at("primitives").is_array()) {
    throw ValidationError("primitives", "expected an array");
  }
  const json& prims = j.at("primitives");
  for (size_t i = 0; i < prims.size(); ++i) {
    const json& pj = prims[i];
    const std::string prefix = "primitives[" + std::to_string(i) + "]";
    Primitive p;
    const std::string shape = pj.value("shape", "");
    if (shape == "sphere") {
      p.shape = Shape::kSphere;
      p.radius = read_number(pj, "radius", prefix + ".radius");
    } else if (shape == "box") {
      p.shape = Shape::kBox;
      if (!pj.contains("size")) throw ValidationError(prefix + ".size", "missing");
      p.size = read_vec3(pj.at("size"), prefix + ".size");
    } else {
      throw ValidationError(prefix + ".shape", "expected \"sphere\" or \"box\"");
    }
    if (!pj.contains("center")) throw ValidationError(prefix + ".center", "missing");
    p.center = read_vec3(pj.at("center"), prefix + ".center");
    p.density = read_number(pj, "density", prefix + ".density");
    if (!pj.contains("color")) throw ValidationError(prefix + ".color", "missing");
    p.color = read_vec3(pj.at("color"), prefix + ".color");
    scene.primitives.push_back(p);
  }
  validate_scene(scene);
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(strip_header(ss.str()), path.string());
}

std::string dump_scene(const Scene& scene) {
  json j;
  if (!scene.name.empty()) j["name"] = scene.name;
  j["label"] = scene.label;
  j["near"] = scene.near;
  j["far"] = scene.far;
  j["background"] = vec_json(scene.background);
  json prims = json::array();
  for (const Primitive& p : scene.primitives) {
    json pj;
    if (p.shape == Shape::kSphere) {
      pj["shape"] = "sphere";
      pj["radius"] = p.radius;
    } else {
      pj["shape"] = "box";
      pj["size"] = vec_json(p.size);
    }
    pj["center"] = vec_json(p.center);
    pj["density"] = p.density;
    pj["color"] = vec_json(p.color);
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  return j.dump(2) + "\n";
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_scene(scene);
}

std::vector<Scene> load_scene_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("scene directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> scenes;
  for (const auto& f : files) {
    scenes.push_back(load_scene(f));
    if (scenes.back().name.empty()) scenes.back().name = f.stem().string();
  }
  if (scenes.empty()) throw ParseError("no *.json scenes in " + dir.string());
  return scenes;
}

}  // namespace viat
