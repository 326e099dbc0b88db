#pragma once

#include <string_view>
#include <vector>

#include "pixle/image.hpp"
#include "pixle/rng.hpp"

namespace pixle {

/// Rule assigning each patch pixel the position it is moved to.
enum class MappingKind { Random, Similarity, Distance, SimilarityDist, DistanceDist };

const char* to_string(MappingKind kind) noexcept;
/// Accepts the CLI names: random, similarity, distance, similarity-dist, distance-dist.
MappingKind parse_mapping_kind(std::string_view name);
bool is_stochastic(MappingKind kind) noexcept;

/// Distance from one source pixel to every position, indexed by row-major linear index.
struct PixelDistanceTable {
  PixelCoord source;
  std::vector<double> distances;

  static PixelDistanceTable compute(const ImageTensor& image, PixelCoord source);
};

struct WeightedCoord {
  PixelCoord coord;
  double probability;
};

/// Uniform over every position except the source.
PixelCoord map_random(PixelCoord source, const Shape& shape, Rng& rng);

// The four value-driven kinds only consider positions whose pixel differs from
// the source (distance > 0) and throw NoValidDestination when none exists.
// Deterministic ties go to the smallest row-major index.
PixelCoord map_similarity(PixelCoord source, const ImageTensor& image);
PixelCoord map_distance(PixelCoord source, const ImageTensor& image);
PixelCoord map_similarity_distribution(PixelCoord source, const ImageTensor& image, Rng& rng);
PixelCoord map_distance_distribution(PixelCoord source, const ImageTensor& image, Rng& rng);

/// Candidate positions and their sampling probabilities for the two
/// distributional kinds, in row-major order. Weights are exp(-d/s) (similarity)
/// or exp(+d/s) (distance), where s is the mean candidate distance (1 if zero).
std::vector<WeightedCoord> destination_distribution(MappingKind kind, PixelCoord source,
                                                    const ImageTensor& image);

/// Dispatches on `kind`. Deterministic kinds leave `rng` untouched.
PixelCoord map_pixel(MappingKind kind, PixelCoord source, const ImageTensor& image, Rng& rng);

}  // namespace pixle
