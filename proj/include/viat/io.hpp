#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "viat/render.hpp"

namespace viat {

/// "# key: value" comment block that starts every text artifact.
std::string artifact_header(const std::string& command, const std::string& config_json, std::uint64_t seed);

/// Drops the leading "#" comment lines written by artifact_header.
std::string strip_header(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Binary PPM (P6); `comment` lines are embedded in the header.
std::string encode_ppm(const RenderedImage& image, const std::string& comment = {});
void write_ppm(const RenderedImage& image, const std::filesystem::path& path, const std::string& comment = {});

/// Pixels flattened as one float per line in row-major RGB order.
std::string encode_image_csv(const RenderedImage& image);

/// Tiles equally sized images left-to-right, top-to-bottom.
RenderedImage tile_images(std::span<const RenderedImage> images, int columns);

/// printf-style "%.10g".
std::string format_double(double x);

}  // namespace viat
