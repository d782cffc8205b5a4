#include "sea/spatial/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sea/kernels/kernels.hpp"

namespace sea::spatial {

namespace {

// Candidate ordering key: nearer first, then lexicographic coordinate, then index.
struct Ranked {
  double d2;
  Vec2 p;
  std::size_t index;
};

bool ranked_less(const Ranked& a, const Ranked& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  if (a.p.x != b.p.x) return a.p.x < b.p.x;
  if (a.p.y != b.p.y) return a.p.y < b.p.y;
  return a.index < b.index;
}

// Row q of the table holds squared distances from query q to every point.
std::vector<double> distance_table(std::span<const Vec2> queries, std::span<const Vec2> pts) {
  std::vector<double> flat_q(2 * queries.size()), flat_p(2 * pts.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    flat_q[2 * i] = queries[i].x;
    flat_q[2 * i + 1] = queries[i].y;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    flat_p[2 * i] = pts[i].x;
    flat_p[2 * i + 1] = pts[i].y;
  }
  std::vector<double> d(queries.size() * pts.size());
  kernels::omp::pairwise_sq_dist(flat_q, flat_p, d);
  return d;
}

std::vector<Ranked> nearest(std::span<const double> d2_row, std::span<const Vec2> pts, std::size_t k) {
  std::vector<Ranked> r(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) r[i] = {d2_row[i], pts[i], i};
  k = std::min(k, r.size());
  std::partial_sort(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k), r.end(), ranked_less);
  r.resize(k);
  return r;
}

}  // namespace

std::size_t isqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

ClusterCounts cluster_counts(std::size_t alive) {
  if (alive == 0) throw Error("cluster_counts: no alive agents");
  const std::size_t n1 = std::max<std::size_t>(1, isqrt(alive));
  const std::size_t n2 = std::max<std::size_t>(1, isqrt(n1));
  return {n1, n2};
}

std::size_t default_cluster_size(std::size_t points, std::size_t clusters) {
  if (points == 0 || clusters == 0) throw Error("default_cluster_size: empty level");
  const std::size_t per = (points + clusters - 1) / clusters;
  return std::min(points, std::max<std::size_t>(3, per));
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec2> coords, std::size_t m) {
  const std::size_t n = coords.size();
  if (m < 1 || m > n) {
    throw Error("farthest_point_sampling: m=" + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (lex_less(coords[i], coords[start])) start = i;

  std::vector<std::size_t> picked{start};
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[start] = true;
  while (picked.size() < m) {
    const Vec2 last = coords[picked.back()];
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_d2[i] = std::min(min_d2[i], squared_distance(coords[i], last));
      if (best == n) {
        best = i;
        continue;
      }
      if (min_d2[i] > min_d2[best] ||
          (min_d2[i] == min_d2[best] && lex_less(coords[i], coords[best]))) {
        best = i;
      }
    }
    taken[best] = true;
    picked.push_back(best);
  }
  return picked;
}

std::vector<Cluster> knn_group(std::span<const std::size_t> centroids, std::span<const Vec2> coords,
                               std::size_t k, bool ensure_coverage) {
  if (k < 1) throw Error("knn_group: K must be at least 1");
  if (coords.empty()) throw Error("knn_group: no points to group");
  std::vector<Cluster> clusters;
  clusters.reserve(centroids.size());
  std::vector<bool> covered(coords.size(), false);
  std::vector<Vec2> centre_coords;
  for (std::size_t c : centroids) {
    if (c >= coords.size()) throw Error("knn_group: centroid index out of range");
    centre_coords.push_back(coords[c]);
  }
  const auto table = distance_table(centre_coords, coords);
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const std::size_t c = centroids[j];
    Cluster cl{c, {}};
    const std::span<const double> row(table.data() + j * coords.size(), coords.size());
    for (const Ranked& r : nearest(row, coords, k)) {
      cl.members.push_back(r.index);
      covered[r.index] = true;
    }
    clusters.push_back(std::move(cl));
  }
  if (ensure_coverage && !clusters.empty()) {
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (covered[i]) continue;
      std::size_t best = 0;
      Ranked best_key{squared_distance(coords[i], coords[clusters[0].centroid]), coords[clusters[0].centroid],
                      clusters[0].centroid};
      for (std::size_t j = 1; j < clusters.size(); ++j) {
        const std::size_t c = clusters[j].centroid;
        Ranked key{squared_distance(coords[i], coords[c]), coords[c], c};
        if (ranked_less(key, best_key)) {
          best_key = key;
          best = j;
        }
      }
      clusters[best].members.push_back(i);
    }
  }
  for (Cluster& cl : clusters) std::sort(cl.members.begin(), cl.members.end());
  return clusters;
}

std::vector<ad::RowMix> idw_stencils(std::span<const Vec2> queries, std::span<const Vec2> sources,
                                     std::size_t k, double power) {
  if (sources.empty()) throw Error("idw_interpolate: no source points");
  if (k < 1) throw Error("idw_interpolate: k must be at least 1");
  std::vector<ad::RowMix> out;
  out.reserve(queries.size());
  const auto table = distance_table(queries, sources);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const std::span<const double> row(table.data() + qi * sources.size(), sources.size());
    const auto near = nearest(row, sources, k);
    ad::RowMix mix;
    if (std::sqrt(near.front().d2) < kCoincidentDistance) {
      mix.sources = {near.front().index};
      mix.weights = {1.0};
      out.push_back(std::move(mix));
      continue;
    }
    double total = 0.0;
    for (const Ranked& r : near) {
      const double w = 1.0 / std::pow(std::sqrt(r.d2), power);
      mix.sources.push_back(r.index);
      mix.weights.push_back(w);
      total += w;
    }
    for (double& w : mix.weights) w /= total;
    out.push_back(std::move(mix));
  }
  return out;
}

ad::Matrix idw_interpolate(std::span<const Vec2> queries, std::span<const Vec2> sources,
                           const ad::Matrix& source_features, std::size_t k, double power) {
  if (source_features.rows() != sources.size()) {
    throw Error("idw_interpolate: " + std::to_string(sources.size()) + " sources but " +
                std::to_string(source_features.rows()) + " feature rows");
  }
  const auto stencils = idw_stencils(queries, sources, k, power);
  ad::Matrix out(queries.size(), source_features.cols());
  for (std::size_t q = 0; q < stencils.size(); ++q) {
    auto row = out.row_span(q);
    for (std::size_t j = 0; j < stencils[q].sources.size(); ++j) {
      const double w = stencils[q].weights[j];
      auto src = source_features.row_span(stencils[q].sources[j]);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += w * src[c];
    }
  }
  return out;
}

}  // namespace sea::spatial
