#include "pixle/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace pixle {

namespace {

bool in_unit_range(float v) { return v >= 0.0f && v <= 1.0f; }

void require_in_bounds(const ImageTensor& image, PixelCoord p) {
  if (!image.contains(p)) {
    throw ContractViolation("pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                            ") outside " + std::to_string(image.height()) + "x" +
                            std::to_string(image.width()) + " image");
  }
}

}  // namespace

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : shape_{channels, height, width} {
  if (channels == 0 || height == 0 || width == 0) {
    throw ContractViolation("image dimensions must be positive");
  }
  if (!in_unit_range(fill)) throw ContractViolation("fill value outside [0, 1]");
  data_.assign(shape_.size(), fill);
}

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width,
                         std::vector<float> data)
    : shape_{channels, height, width}, data_(std::move(data)) {
  if (channels == 0 || height == 0 || width == 0) {
    throw ContractViolation("image dimensions must be positive");
  }
  if (data_.size() != shape_.size()) {
    throw ContractViolation("image data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(shape_.size()));
  }
  if (!std::all_of(data_.begin(), data_.end(), in_unit_range)) {
    throw ContractViolation("image values must lie in [0, 1]");
  }
}

void ImageTensor::set(std::size_t channel, std::size_t row, std::size_t col, float v) {
  if (channel >= shape_.channels || row >= shape_.height || col >= shape_.width) {
    throw ContractViolation("image index out of range");
  }
  if (!in_unit_range(v)) throw ContractViolation("image values must lie in [0, 1]");
  data_[offset(channel, row, col)] = v;
}

std::vector<float> ImageTensor::pixel(PixelCoord p) const {
  std::vector<float> out(shape_.channels);
  for (std::size_t c = 0; c < shape_.channels; ++c) out[c] = at(c, p);
  return out;
}

bool ImageTensor::same_pixel(PixelCoord a, PixelCoord b) const noexcept {
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    if (data_[offset(c, a.row, a.col)] != data_[offset(c, b.row, b.col)]) return false;
  }
  return true;
}

void ImageTensor::copy_pixel(PixelCoord from, PixelCoord to) noexcept {
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    data_[offset(c, to.row, to.col)] = data_[offset(c, from.row, from.col)];
  }
}

void ImageTensor::swap_pixels(PixelCoord a, PixelCoord b) noexcept {
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    std::swap(data_[offset(c, a.row, a.col)], data_[offset(c, b.row, b.col)]);
  }
}

std::vector<PixelCoord> build_patch_indices(const Patch& patch, std::size_t height,
                                            std::size_t width) {
  if (patch.width == 0 || patch.height == 0 || patch.width > width || patch.height > height) {
    throw InvalidPatch("patch " + std::to_string(patch.width) + "x" +
                       std::to_string(patch.height) + " does not fit a " +
                       std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  const std::size_t ox = std::min(patch.origin_x, width - patch.width);
  const std::size_t oy = std::min(patch.origin_y, height - patch.height);

  std::vector<PixelCoord> out;
  out.reserve(patch.area());
  for (std::size_t j = 0; j < patch.height; ++j) {
    for (std::size_t i = 0; i < patch.width; ++i) out.push_back({oy + j, ox + i});
  }
  return out;
}

ImageTensor apply_mapping(const ImageTensor& image, std::span<const PixelCoord> sources,
                          std::span<const PixelCoord> destinations, TransferMode mode) {
  if (sources.size() != destinations.size()) {
    throw ContractViolation("sources and destinations differ in length");
  }
  for (std::size_t k = 0; k < sources.size(); ++k) {
    require_in_bounds(image, sources[k]);
    require_in_bounds(image, destinations[k]);
  }

  ImageTensor out = image;
  switch (mode) {
    case TransferMode::Overwrite:
      // Reads come from the untouched input, so chained pairs never see a
      // value written earlier in the same application.
      for (std::size_t k = 0; k < sources.size(); ++k) {
        for (std::size_t c = 0; c < image.channels(); ++c) {
          out.set(c, destinations[k].row, destinations[k].col, image.at(c, sources[k]));
        }
      }
      break;
    case TransferMode::Swap:
      for (std::size_t k = 0; k < sources.size(); ++k) out.swap_pixels(sources[k], destinations[k]);
      break;
  }
  return out;
}

std::size_t l0_pixel_distance(const ImageTensor& a, const ImageTensor& b) {
  if (a.shape() != b.shape()) throw ShapeMismatch("l0 distance on images of different shape");
  std::size_t count = 0;
  for (std::size_t r = 0; r < a.height(); ++r) {
    for (std::size_t col = 0; col < a.width(); ++col) {
      for (std::size_t c = 0; c < a.channels(); ++c) {
        if (a.at(c, r, col) != b.at(c, r, col)) {
          ++count;
          break;
        }
      }
    }
  }
  return count;
}

double pixel_distance(const ImageTensor& image, PixelCoord a, PixelCoord b) {
  double sum = 0.0;
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const double diff = static_cast<double>(image.at(c, a)) - static_cast<double>(image.at(c, b));
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

const char* to_string(TransferMode mode) noexcept {
  return mode == TransferMode::Overwrite ? "overwrite" : "swap";
}

TransferMode parse_transfer_mode(std::string_view name) {
  if (name == "overwrite") return TransferMode::Overwrite;
  if (name == "swap") return TransferMode::Swap;
  throw ConfigError("unknown transfer mode '" + std::string(name) + "'");
}

}  // namespace pixle
