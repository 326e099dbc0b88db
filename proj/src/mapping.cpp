#include "pixle/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pixle {

namespace {

void require_source(const ImageTensor& image, PixelCoord source) {
  if (!image.contains(source)) throw ContractViolation("mapping source outside the image");
  if (image.pixel_count() < 2) throw NoValidDestination("image has a single pixel");
}

// Every similarity/distance kind skips positions holding the source's own
// value: copying an identical pixel is a no-op move.
bool admissible(double d) { return d > 0.0; }

PixelCoord sample_from(const std::vector<WeightedCoord>& dist, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (const auto& w : dist) {
    cumulative += w.probability;
    if (u < cumulative) return w.coord;
  }
  return dist.back().coord;
}

}  // namespace

const char* to_string(MappingKind kind) noexcept {
  switch (kind) {
    case MappingKind::Random: return "random";
    case MappingKind::Similarity: return "similarity";
    case MappingKind::Distance: return "distance";
    case MappingKind::SimilarityDist: return "similarity-dist";
    case MappingKind::DistanceDist: return "distance-dist";
  }
  return "?";
}

MappingKind parse_mapping_kind(std::string_view name) {
  for (auto kind : {MappingKind::Random, MappingKind::Similarity, MappingKind::Distance,
                    MappingKind::SimilarityDist, MappingKind::DistanceDist}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown mapping '" + std::string(name) + "'");
}

bool is_stochastic(MappingKind kind) noexcept {
  return kind == MappingKind::Random || kind == MappingKind::SimilarityDist ||
         kind == MappingKind::DistanceDist;
}

PixelDistanceTable PixelDistanceTable::compute(const ImageTensor& image, PixelCoord source) {
  PixelDistanceTable table{source, std::vector<double>(image.pixel_count())};
  for (std::size_t i = 0; i < table.distances.size(); ++i) {
    table.distances[i] = pixel_distance(image, source, image.coord_of(i));
  }
  return table;
}

PixelCoord map_random(PixelCoord source, const Shape& shape, Rng& rng) {
  const std::size_t n = shape.pixels();
  if (source.row >= shape.height || source.col >= shape.width) {
    throw ContractViolation("mapping source outside the image");
  }
  if (n < 2) throw NoValidDestination("image has a single pixel");
  const std::size_t source_index = source.row * shape.width + source.col;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t index = pick(rng);
  while (index == source_index) index = pick(rng);
  return {index / shape.width, index % shape.width};
}

PixelCoord map_similarity(PixelCoord source, const ImageTensor& image) {
  require_source(image, source);
  const auto table = PixelDistanceTable::compute(image, source);
  std::size_t best = table.distances.size();
  for (std::size_t i = 0; i < table.distances.size(); ++i) {
    if (!admissible(table.distances[i])) continue;
    if (best == table.distances.size() || table.distances[i] < table.distances[best]) best = i;
  }
  if (best == table.distances.size()) {
    throw NoValidDestination("every pixel equals the source; no position has positive distance");
  }
  return image.coord_of(best);
}

PixelCoord map_distance(PixelCoord source, const ImageTensor& image) {
  if (!image.contains(source)) throw ContractViolation("mapping source outside the image");
  const auto table = PixelDistanceTable::compute(image, source);
  std::size_t best = table.distances.size();
  for (std::size_t i = 0; i < table.distances.size(); ++i) {
    if (!admissible(table.distances[i])) continue;
    if (best == table.distances.size() || table.distances[i] > table.distances[best]) best = i;
  }
  if (best == table.distances.size()) {
    throw NoValidDestination("every pixel equals the source; no position has positive distance");
  }
  return image.coord_of(best);
}

std::vector<WeightedCoord> destination_distribution(MappingKind kind, PixelCoord source,
                                                    const ImageTensor& image) {
  if (kind != MappingKind::SimilarityDist && kind != MappingKind::DistanceDist) {
    throw ContractViolation("destination_distribution needs a distributional mapping kind");
  }
  if (!image.contains(source)) throw ContractViolation("mapping source outside the image");
  const auto table = PixelDistanceTable::compute(image, source);

  std::vector<std::size_t> candidates;
  double total = 0.0;
  for (std::size_t i = 0; i < table.distances.size(); ++i) {
    if (admissible(table.distances[i])) {
      candidates.push_back(i);
      total += table.distances[i];
    }
  }
  if (candidates.empty()) throw NoValidDestination("no admissible destination for source pixel");

  double scale = total / static_cast<double>(candidates.size());
  if (scale == 0.0) scale = 1.0;
  const double sign = kind == MappingKind::SimilarityDist ? -1.0 : 1.0;

  // Shift exponents by their maximum so the largest weight is exp(0).
  double max_exponent = -INFINITY;
  for (auto i : candidates) max_exponent = std::max(max_exponent, sign * table.distances[i] / scale);

  std::vector<WeightedCoord> out;
  out.reserve(candidates.size());
  double norm = 0.0;
  for (auto i : candidates) {
    const double w = std::exp(sign * table.distances[i] / scale - max_exponent);
    out.push_back({image.coord_of(i), w});
    norm += w;
  }
  for (auto& w : out) w.probability /= norm;
  return out;
}

PixelCoord map_similarity_distribution(PixelCoord source, const ImageTensor& image, Rng& rng) {
  require_source(image, source);
  return sample_from(destination_distribution(MappingKind::SimilarityDist, source, image), rng);
}

PixelCoord map_distance_distribution(PixelCoord source, const ImageTensor& image, Rng& rng) {
  return sample_from(destination_distribution(MappingKind::DistanceDist, source, image), rng);
}

PixelCoord map_pixel(MappingKind kind, PixelCoord source, const ImageTensor& image, Rng& rng) {
  switch (kind) {
    case MappingKind::Random: return map_random(source, image.shape(), rng);
    case MappingKind::Similarity: return map_similarity(source, image);
    case MappingKind::Distance: return map_distance(source, image);
    case MappingKind::SimilarityDist: return map_similarity_distribution(source, image, rng);
    case MappingKind::DistanceDist: return map_distance_distribution(source, image, rng);
  }
  throw ConfigError("unhandled mapping kind");
}

}  // namespace pixle
