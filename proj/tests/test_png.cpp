#include <gtest/gtest.h>

#include <random>

#include "pixle/png_io.hpp"
#include "test_support.hpp"

namespace pixle {
namespace {

TEST(Png, ByteScaling) {
  EXPECT_EQ(byte_to_unit(255), 1.0f);
  EXPECT_EQ(byte_to_unit(0), 0.0f);
  EXPECT_EQ(unit_to_byte(1.0f), 255);
  EXPECT_EQ(unit_to_byte(0.0f), 0);
}

TEST(Png, HalfRoundTrip) {
  // round(0.5 * 255) = round(127.5) = 128, decoded back to 128 / 255.
  ImageTensor img(1, 1, 1, 0.5f);
  const auto decoded = image_from_png(image_to_png(img));
  EXPECT_EQ(unit_to_byte(0.5f), 128);
  EXPECT_EQ(decoded.at(0, 0, 0), 128.0f / 255.0f);
}

TEST(Png, RgbLayoutSurvives) {
  ImageTensor img(3, 2, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t x = 0; x < 3; ++x) img.set(c, r, x, byte_to_unit(static_cast<std::uint8_t>(40 * c + 10 * r + x)));
  EXPECT_EQ(image_from_png(image_to_png(img)), img);
}

TEST(Png, DecodeEncodeDecodeIsStable) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t channels = trial % 2 == 0 ? 1 : 3;
    const auto img = testing::random_image(gen, channels, 1 + trial % 5, 1 + trial % 7);
    const auto once = image_from_png(image_to_png(img));
    const auto twice = image_from_png(image_to_png(once));
    EXPECT_EQ(once, twice);
  }
}

TEST(Png, RejectsGarbage) {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  EXPECT_THROW(image_from_png(junk), PngError);
}

TEST(Png, RejectsTruncatedStream) {
  auto bytes = image_to_png(ImageTensor(1, 4, 4, 0.25f));
  bytes.resize(bytes.size() - 20);
  EXPECT_THROW(image_from_png(bytes), PngError);
}

TEST(Png, RejectsSixteenBitDepth) {
  auto bytes = image_to_png(ImageTensor(1, 2, 2, 0.25f));
  bytes[24] = 16;  // IHDR bit depth
  EXPECT_THROW(image_from_png(bytes), PngError);
}

TEST(Png, EncodeRejectsUnsupportedChannelCount) {
  EXPECT_THROW(image_to_png(ImageTensor(2, 2, 2)), PngError);
}

TEST(Png, FileRoundTrip) {
  testing::TempDir dir;
  ImageTensor img(1, 3, 3, byte_to_unit(77));
  save_png(dir.path() / "x.png", img);
  EXPECT_EQ(load_png(dir.path() / "x.png"), img);
  EXPECT_THROW(load_png(dir.path() / "missing.png"), PngError);
}

}  // namespace
}  // namespace pixle
