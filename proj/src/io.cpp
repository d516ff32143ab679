#include "viat/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace viat {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string artifact_header(const std::string& command, const std::string& config_json, std::uint64_t seed) {
  std::string out;
  out += "# tool: ";
  out += kToolVersion;
  out += "\n# command: " + command;
  out += "\n# seed: " + std::to_string(seed);
  out += "\n# config: " + config_json + "\n";
  return out;
}

std::string strip_header(const std::string& text) {
  size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) return {};
    pos = nl + 1;
  }
  return text.substr(pos);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string encode_ppm(const RenderedImage& image, const std::string& comment) {
  std::string out = "P6\n";
  std::istringstream lines(comment);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    out += (line.front() == '#' ? line : "# " + line) + "\n";
  }
  out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + static_cast<size_t>(image.pixels.size()));
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
    const double c = std::clamp(image.pixels[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

void write_ppm(const RenderedImage& image, const std::filesystem::path& path, const std::string& comment) {
  write_text(path, encode_ppm(image, comment));
}

std::string encode_image_csv(const RenderedImage& image) {
  std::string out = "value\n";
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) out += format_double(image.pixels[i]) + "\n";
  return out;
}

RenderedImage tile_images(std::span<const RenderedImage> images, int columns) {
  if (images.empty() || columns < 1) throw InvalidArgument("tile_images: nothing to tile");
  const int w = images.front().width, h = images.front().height;
  const int n = static_cast<int>(images.size());
  const int cols = std::min(columns, n);
  const int rows = (n + cols - 1) / cols;
  RenderedImage grid;
  grid.width = cols * w;
  grid.height = rows * h;
  grid.pixels = VectorXd::Zero(3 * grid.width * grid.height);
  for (int k = 0; k < n; ++k) {
    const RenderedImage& img = images[static_cast<size_t>(k)];
    if (img.width != w || img.height != h) throw InvalidArgument("tile_images: size mismatch");
    const int ox = (k % cols) * w, oy = (k / cols) * h;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        grid.pixels.segment<3>(3 * ((oy + y) * grid.width + ox + x)) = img.pixel(x, y);
  }
  return grid;
}

}  // namespace viat
