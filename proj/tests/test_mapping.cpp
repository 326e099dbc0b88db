#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pixle/mapping.hpp"
#include "test_support.hpp"

namespace pixle {
namespace {

ImageTensor row(std::vector<float> values) {
  const std::size_t n = values.size();
  return ImageTensor(1, 1, n, std::move(values));
}

TEST(MapRandom, OnlyOtherPositionOfTwoPixelImage) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(map_random({0, 0}, {1, 1, 2}, rng), (PixelCoord{0, 1}));
}

TEST(MapRandom, SeedDeterminism) {
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(map_random({1, 1}, {1, 4, 4}, a), map_random({1, 1}, {1, 4, 4}, b));
}

TEST(MapRandom, UniformOverOtherPositions) {
  Rng rng(11);
  std::map<PixelCoord, int> counts;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++counts[map_random({0, 0}, {1, 2, 2}, rng)];
  EXPECT_EQ(counts.count({0, 0}), 0u);
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [coord, n] : counts) EXPECT_NEAR(n / double(kDraws), 1.0 / 3.0, 0.02);
}

TEST(MapRandom, SinglePixelImageHasNoDestination) {
  Rng rng(1);
  EXPECT_THROW(map_random({0, 0}, {3, 1, 1}, rng), NoValidDestination);
}

TEST(MapSimilarity, NearestValue) {
  EXPECT_EQ(map_similarity({0, 0}, row({0.0f, 0.5f, 0.9f})), (PixelCoord{0, 1}));
}

TEST(MapSimilarity, SkipsIdenticalValues) {
  // (0,2) holds the source's own value; copying it would change nothing.
  EXPECT_EQ(map_similarity({0, 0}, row({0.3f, 0.9f, 0.3f, 0.5f})), (PixelCoord{0, 3}));
}

TEST(MapSimilarity, ConstantImageHasNoDestination) {
  EXPECT_THROW(map_similarity({0, 0}, row({0.2f, 0.2f, 0.2f})), NoValidDestination);
}

TEST(MapSimilarity, TieGoesToSmallestIndex) {
  EXPECT_EQ(map_similarity({0, 1}, row({0.4f, 0.5f, 0.6f})), (PixelCoord{0, 0}));
}

TEST(MapDistance, FarthestValue) {
  EXPECT_EQ(map_distance({0, 0}, row({0.0f, 0.5f, 0.9f})), (PixelCoord{0, 2}));
}

TEST(MapDistance, OnlyDifferingPixelIsChosen) {
  ImageTensor img(3, 2, 2, 0.5f);
  img.set(1, 1, 0, 0.25f);
  EXPECT_EQ(map_distance({0, 0}, img), (PixelCoord{1, 0}));
}

TEST(MapDistance, ConstantImageHasNoDestination) {
  EXPECT_THROW(map_distance({0, 0}, ImageTensor(1, 3, 3, 0.7f)), NoValidDestination);
}

TEST(DistanceTable, Properties) {
  std::mt19937_64 gen(5);
  const auto img = testing::random_image(gen, 3, 4, 4);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto t = PixelDistanceTable::compute(img, img.coord_of(i));
    EXPECT_EQ(t.distances[i], 0.0);
    for (std::size_t j = 0; j < img.pixel_count(); ++j) {
      EXPECT_GE(t.distances[j], 0.0);
      EXPECT_EQ(t.distances[j], PixelDistanceTable::compute(img, img.coord_of(j)).distances[i]);
    }
  }
}

// Independent evaluation: d = {0.4, 0.8}, s = 0.6, weights exp(-d/s) normalized.
TEST(Distribution, SimilarityProbabilities) {
  const auto dist = destination_distribution(MappingKind::SimilarityDist, {0, 0}, row({0.0f, 0.4f, 0.8f}));
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_EQ(dist[0].coord, (PixelCoord{0, 1}));
  EXPECT_NEAR(dist[0].probability, 0.6607563687658172, 1e-6);
  EXPECT_NEAR(dist[1].probability, 0.33924363123418283, 1e-6);
}

TEST(Distribution, DistanceProbabilitiesMirror) {
  const auto dist = destination_distribution(MappingKind::DistanceDist, {0, 0}, row({0.0f, 0.4f, 0.8f}));
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_NEAR(dist[0].probability, 0.33924363123418283, 1e-6);
  EXPECT_NEAR(dist[1].probability, 0.6607563687658172, 1e-6);
}

TEST(Distribution, EqualDistancesAreEquallyLikely) {
  for (auto kind : {MappingKind::SimilarityDist, MappingKind::DistanceDist}) {
    const auto dist = destination_distribution(kind, {0, 1}, row({0.25f, 0.5f, 0.75f}));
    ASSERT_EQ(dist.size(), 2u);
    EXPECT_EQ(dist[0].probability, 0.5);
    EXPECT_EQ(dist[1].probability, 0.5);
  }
}

TEST(Distribution, LargeDistanceSpreadStaysFinite) {
  std::vector<float> values(64, 0.0f);
  values[1] = 1e-6f;
  values[63] = 1.0f;
  const auto dist = destination_distribution(MappingKind::DistanceDist, {0, 0}, row(values));
  double total = 0.0;
  for (const auto& w : dist) {
    EXPECT_TRUE(std::isfinite(w.probability));
    total += w.probability;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Distribution, EmpiricalFrequenciesConverge) {
  const auto img = row({0.0f, 0.1f, 0.45f, 0.9f, 0.9f});
  for (auto kind : {MappingKind::SimilarityDist, MappingKind::DistanceDist}) {
    const auto dist = destination_distribution(kind, {0, 0}, img);
    Rng rng(99);
    std::map<PixelCoord, int> counts;
    constexpr int kDraws = 10000;
    for (int i = 0; i < kDraws; ++i) ++counts[map_pixel(kind, {0, 0}, img, rng)];
    for (const auto& w : dist) EXPECT_NEAR(counts[w.coord] / double(kDraws), w.probability, 0.02);
  }
}

TEST(MapPixel, DeterministicKindsDoNotConsumeRng) {
  std::mt19937_64 gen(2);
  const auto img = testing::random_image(gen, 3, 4, 4);
  Rng rng(1), untouched(1);
  map_pixel(MappingKind::Similarity, {1, 2}, img, rng);
  map_pixel(MappingKind::Distance, {1, 2}, img, rng);
  EXPECT_EQ(rng(), untouched());
}

TEST(MappingKind, CliNames) {
  for (auto name : {"random", "similarity", "distance", "similarity-dist", "distance-dist"}) {
    EXPECT_STREQ(to_string(parse_mapping_kind(name)), name);
  }
  EXPECT_THROW(parse_mapping_kind("nearest"), ConfigError);
  EXPECT_TRUE(is_stochastic(MappingKind::SimilarityDist));
  EXPECT_FALSE(is_stochastic(MappingKind::Distance));
}

}  // namespace
}  // namespace pixle
