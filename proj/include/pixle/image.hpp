#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "pixle/errors.hpp"

namespace pixle {

struct Shape {
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t pixels() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct PixelCoord {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// Rectangle of source pixels: origin column/row plus per-side extent.
struct Patch {
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  std::size_t width = 1;
  std::size_t height = 1;

  std::size_t area() const noexcept { return width * height; }
  friend bool operator==(const Patch&, const Patch&) = default;
};

enum class TransferMode { Overwrite, Swap };

/// Dense image with values in [0, 1], stored channel-major (channel, row, column).
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data);
  explicit ImageTensor(Shape shape, float fill = 0.0f)
      : ImageTensor(shape.channels, shape.height, shape.width, fill) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t pixel_count() const noexcept { return shape_.pixels(); }

  std::span<const float> data() const noexcept { return data_; }

  float at(std::size_t channel, std::size_t row, std::size_t col) const {
    return data_[offset(channel, row, col)];
  }
  float at(std::size_t channel, PixelCoord p) const { return at(channel, p.row, p.col); }

  /// Throws ContractViolation when v is outside [0, 1] or the index is out of range.
  void set(std::size_t channel, std::size_t row, std::size_t col, float v);

  bool contains(PixelCoord p) const noexcept {
    return p.row < shape_.height && p.col < shape_.width;
  }
  std::size_t linear_index(PixelCoord p) const noexcept { return p.row * shape_.width + p.col; }
  PixelCoord coord_of(std::size_t linear) const noexcept {
    return {linear / shape_.width, linear % shape_.width};
  }

  std::vector<float> pixel(PixelCoord p) const;
  bool same_pixel(PixelCoord a, PixelCoord b) const noexcept;

  /// Copies the channel vector at `from` onto `to`.
  void copy_pixel(PixelCoord from, PixelCoord to) noexcept;
  void swap_pixels(PixelCoord a, PixelCoord b) noexcept;

  friend bool operator==(const ImageTensor& a, const ImageTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::size_t channel, std::size_t row, std::size_t col) const noexcept {
    return (channel * shape_.height + row) * shape_.width + col;
  }

  Shape shape_{0, 0, 0};
  std::vector<float> data_;
};

/// Row-major list of the patch's pixel coordinates. A patch that would leave the
/// image has its origin shifted toward (0, 0) until it fits; its size is kept.
std::vector<PixelCoord> build_patch_indices(const Patch& patch, std::size_t height,
                                            std::size_t width);

/// Moves pixel values from `sources` to `destinations`. All reads of the input
/// happen before any write for Overwrite; Swap exchanges pairs in list order.
ImageTensor apply_mapping(const ImageTensor& image, std::span<const PixelCoord> sources,
                          std::span<const PixelCoord> destinations, TransferMode mode);

/// Number of pixel positions whose channel vectors differ in any channel.
std::size_t l0_pixel_distance(const ImageTensor& a, const ImageTensor& b);

/// Euclidean distance between the channel vectors at two positions.
double pixel_distance(const ImageTensor& image, PixelCoord a, PixelCoord b);

const char* to_string(TransferMode mode) noexcept;
TransferMode parse_transfer_mode(std::string_view name);

}  // namespace pixle
