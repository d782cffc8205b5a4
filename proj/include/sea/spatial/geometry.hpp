#pragma once

// Planar point-set primitives used by the spatial extractor: cluster-count
// schedule, farthest point sampling, k-nearest-neighbour grouping, and
// inverse-distance interpolation.
//
// Every selection below orders candidates by (distance, x, y, index), so the
// chosen points depend only on the coordinates and not on the input order
// whenever coordinates are distinct.

#include <cstddef>
#include <span>
#include <vector>

#include "sea/ad/matrix.hpp"
#include "sea/ad/tape.hpp"

namespace sea::spatial {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double squared_distance(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Lexicographic (x, y) order.
inline bool lex_less(Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

struct ClusterCounts {
  std::size_t level1 = 1;
  std::size_t level2 = 1;
  friend bool operator==(const ClusterCounts&, const ClusterCounts&) = default;
};

// N1 = max(1, floor(sqrt(n))), N2 = max(1, floor(sqrt(N1))).
ClusterCounts cluster_counts(std::size_t alive);

// Integer floor(sqrt(n)).
std::size_t isqrt(std::size_t n);

// Default cluster membership size for `points` split among `clusters` centroids:
// max(3, ceil(points / clusters)), clamped to `points`.
std::size_t default_cluster_size(std::size_t points, std::size_t clusters);

// Greedy max-min selection of m indices. Starts from the lexicographically
// smallest coordinate.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec2> coords, std::size_t m);

struct Cluster {
  std::size_t centroid = 0;             // index into the grouped point list
  std::vector<std::size_t> members;     // ascending indices, centroid included
  friend bool operator==(const Cluster&, const Cluster&) = default;
};

// The min(K, n) nearest points of each centroid. With `ensure_coverage`, any
// point left out of every cluster joins its nearest centroid's cluster.
std::vector<Cluster> knn_group(std::span<const std::size_t> centroids, std::span<const Vec2> coords,
                               std::size_t k, bool ensure_coverage = true);

// Per-query interpolation stencil: k nearest sources, weights 1/d^p normalized
// to sum 1. A source closer than 1e-12 takes weight 1 alone.
std::vector<ad::RowMix> idw_stencils(std::span<const Vec2> queries, std::span<const Vec2> sources,
                                     std::size_t k, double power);

inline constexpr double kCoincidentDistance = 1e-12;

// Applies idw_stencils to source features (rows aligned with `sources`).
ad::Matrix idw_interpolate(std::span<const Vec2> queries, std::span<const Vec2> sources,
                           const ad::Matrix& source_features, std::size_t k, double power);

}  // namespace sea::spatial
