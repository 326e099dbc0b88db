#include "pixle/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace pixle {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
constexpr int kColorGray = 0;
constexpr int kColorRgb = 2;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->pos + length > reader->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, reader->data + reader->pos, length);
  reader->pos += length;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

void silent_warning(png_structp, png_const_charp) {}

struct ErrorSink {
  char* message;
  std::size_t length;
};

// Replaces libpng's default handler, which prints to stderr before jumping.
[[noreturn]] void record_error(png_structp png, png_const_charp text) {
  if (auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png)); sink != nullptr) {
    std::strncpy(sink->message, text, sink->length - 1);
  }
  png_longjmp(png, 1);
}

// Only trivially destructible objects live in these frames; libpng longjmps out on error.
bool decode_rows(MemoryReader* reader, std::uint8_t* pixels, std::size_t row_bytes,
                 std::size_t height, char* message, std::size_t message_len) {
  ErrorSink sink{message, message_len};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, record_error, silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    if (message[0] == '\0') std::strncpy(message, "libpng failed to decode stream", message_len - 1);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, reader, read_from_memory);
  png_read_info(png, info);
  if (png_get_rowbytes(png, info) != row_bytes) png_error(png, "unexpected row size");
  for (std::size_t r = 0; r < height; ++r) {
    png_read_row(png, pixels + r * row_bytes, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_rows(std::vector<std::uint8_t>* out, const std::uint8_t* pixels, std::uint32_t width,
                 std::uint32_t height, int color_type, std::size_t row_bytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, record_error, silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels + r * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

std::uint8_t unit_to_byte(float v) {
  const double scaled = std::round(static_cast<double>(v) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

ImageTensor image_from_png(std::span<const std::uint8_t> bytes) {
  // Signature + IHDR chunk header and payload.
  if (bytes.size() < 33 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) {
    throw PngError("not a PNG stream");
  }
  if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) throw PngError("PNG is missing IHDR");
  const std::uint32_t width = read_be32(bytes.data() + 16);
  const std::uint32_t height = read_be32(bytes.data() + 20);
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  const int interlace = bytes[28];
  if (width == 0 || height == 0) throw PngError("PNG has zero extent");
  if (bit_depth != 8) throw PngError("unsupported PNG bit depth " + std::to_string(bit_depth));
  if (color_type != kColorGray && color_type != kColorRgb) {
    throw PngError("unsupported PNG color type " + std::to_string(color_type));
  }
  if (interlace != 0) throw PngError("interlaced PNG is not supported");

  const std::size_t channels = color_type == kColorRgb ? 3 : 1;
  const std::size_t row_bytes = std::size_t{width} * channels;
  std::vector<std::uint8_t> pixels(row_bytes * height);
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  char message[128] = {};
  if (!decode_rows(&reader, pixels.data(), row_bytes, height, message, sizeof message)) {
    throw PngError(message[0] != '\0' ? message : "PNG decode failed");
  }

  std::vector<float> data(channels * std::size_t{height} * width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t col = 0; col < width; ++col) {
      for (std::size_t c = 0; c < channels; ++c) {
        data[(c * height + r) * width + col] = byte_to_unit(pixels[r * row_bytes + col * channels + c]);
      }
    }
  }
  return ImageTensor(channels, height, width, std::move(data));
}

std::vector<std::uint8_t> image_to_png(const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw PngError("PNG export supports 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  const std::size_t channels = image.channels();
  const std::size_t row_bytes = image.width() * channels;
  std::vector<std::uint8_t> pixels(row_bytes * image.height());
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t col = 0; col < image.width(); ++col) {
      for (std::size_t c = 0; c < channels; ++c) {
        pixels[r * row_bytes + col * channels + c] = unit_to_byte(image.at(c, r, col));
      }
    }
  }
  std::vector<std::uint8_t> out;
  if (!encode_rows(&out, pixels.data(), static_cast<std::uint32_t>(image.width()),
                   static_cast<std::uint32_t>(image.height()),
                   channels == 3 ? kColorRgb : kColorGray, row_bytes)) {
    throw PngError("PNG encode failed");
  }
  return out;
}

ImageTensor load_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PngError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return image_from_png(bytes);
  } catch (const PngError& e) {
    throw PngError(path.string() + ": " + e.what());
  }
}

void save_png(const std::filesystem::path& path, const ImageTensor& image) {
  const auto bytes = image_to_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PngError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PngError("write failed for " + path.string());
}

}  // namespace pixle
