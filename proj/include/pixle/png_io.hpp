#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pixle/image.hpp"

namespace pixle {

/// Decodes an 8-bit grayscale or RGB PNG; byte b becomes b / 255.
ImageTensor image_from_png(std::span<const std::uint8_t> bytes);

/// Encodes as 8-bit grayscale (1 channel) or RGB (3 channels); v becomes round(v * 255).
std::vector<std::uint8_t> image_to_png(const ImageTensor& image);

ImageTensor load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const ImageTensor& image);

inline float byte_to_unit(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }
std::uint8_t unit_to_byte(float v);

}  // namespace pixle
