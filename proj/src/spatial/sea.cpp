#include "sea/spatial/sea.hpp"

#include <json.hpp>

namespace sea::spatial {

std::string to_string(SeaMode m) {
  switch (m) {
    case SeaMode::full: return "full";
    case SeaMode::global_only: return "global";
    case SeaMode::local_only: return "local";
  }
  return "full";
}

SeaMode sea_mode_from_string(const std::string& s) {
  if (s == "full") return SeaMode::full;
  if (s == "global") return SeaMode::global_only;
  if (s == "local") return SeaMode::local_only;
  throw Error("sea mode: unknown value '" + s + "' (expected full|global|local)");
}

SeaParams SeaParams::create(const SeaConfig& config, const std::string& name, Rng& rng) {
  using ad::Activation;
  using ad::Mlp;
  if (config.in_dim == 0) throw Error("SeaParams: in_dim must be positive");
  if (config.interp_neighbors == 0) throw Error("SeaParams: interp_neighbors must be positive");
  const std::size_t f = config.in_dim, w1 = config.level1_width, w2 = config.level2_width, d = config.depth;
  SeaParams p;
  p.config = config;
  p.beta1 = Mlp::make(name + ".beta1", f, w1, w1, d, Activation::relu, Activation::relu, rng);
  p.phi1 = Mlp::make(name + ".phi1", w1, w1, w1, d, Activation::relu, Activation::relu, rng);
  if (config.mode == SeaMode::full) {
    p.beta2 = Mlp::make(name + ".beta2", w1, w2, w2, d, Activation::relu, Activation::relu, rng);
    p.phi2 = Mlp::make(name + ".phi2", w2, w2, w2, d, Activation::relu, Activation::relu, rng);
    p.decode2 = Mlp::make(name + ".decode2", w2 + w1, w1, w1, d, Activation::relu, Activation::relu, rng);
  }
  p.decode1 = Mlp::make(name + ".decode1", w1 + f, w1, f, d, Activation::relu, Activation::identity, rng);
  return p;
}

std::vector<ad::Parameter*> SeaParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (ad::Mlp* m : {&beta1, &phi1, &beta2, &phi2, &decode2, &decode1}) {
    auto ps = m->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

namespace {

LevelTopology group_level(std::span<const Vec2> coords, std::size_t n_clusters, std::size_t k) {
  LevelTopology lt;
  lt.centroids = farthest_point_sampling(coords, n_clusters);
  lt.clusters = knn_group(lt.centroids, coords, k);
  for (std::size_t c : lt.centroids) lt.coords.push_back(coords[c]);
  return lt;
}

std::size_t cluster_size(const SeaConfig& cfg, std::size_t points, std::size_t clusters) {
  if (cfg.cluster_size == 0) return default_cluster_size(points, clusters);
  return std::min(cfg.cluster_size, points);
}

}  // namespace

FrameTopology build_topology(std::span<const Vec2> alive_coords, const SeaConfig& config) {
  const std::size_t n = alive_coords.size();
  if (n == 0) throw Error("sea_extract: frame has no alive agents");
  FrameTopology t;
  t.coords.assign(alive_coords.begin(), alive_coords.end());
  t.agents.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.agents[i] = i;
  const ClusterCounts counts = cluster_counts(n);
  const std::size_t k = config.interp_neighbors;
  switch (config.mode) {
    case SeaMode::global_only:
      t.level1 = group_level(t.coords, 1, n);
      break;
    case SeaMode::local_only:
      t.level1 = group_level(t.coords, counts.level1, cluster_size(config, n, counts.level1));
      break;
    case SeaMode::full: {
      t.level1 = group_level(t.coords, counts.level1, cluster_size(config, n, counts.level1));
      const std::size_t n1 = counts.level1;
      t.level2 = group_level(t.level1.coords, counts.level2, cluster_size(config, n1, counts.level2));
      t.up_2_to_1 = idw_stencils(t.level1.coords, t.level2->coords, k, config.distance_power);
      break;
    }
  }
  t.up_1_to_0 = idw_stencils(t.coords, t.level1.coords, k, config.distance_power);
  return t;
}

FrameTopology build_topology(std::span<const Vec2> coords, std::span<const std::uint8_t> alive,
                             const SeaConfig& config) {
  if (coords.size() != alive.size()) throw Error("build_topology: coords/alive length mismatch");
  std::vector<Vec2> live;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (alive[i]) {
      live.push_back(coords[i]);
      index.push_back(i);
    }
  }
  FrameTopology t = build_topology(live, config);
  t.agents = std::move(index);
  return t;
}

namespace {

struct Encoded {
  ad::Var level1;                 // [sum N1 × w1]
  std::optional<ad::Var> level2;  // [sum N2 × w2]
};

// Shifts cluster member lists into the stacked row space of a batch.
std::vector<std::vector<std::size_t>> stacked_segments(std::span<const FrameTopology> frames, bool second) {
  std::vector<std::vector<std::size_t>> segs;
  std::size_t offset = 0;
  for (const FrameTopology& f : frames) {
    const LevelTopology& lt = second ? *f.level2 : f.level1;
    for (const Cluster& c : lt.clusters) {
      std::vector<std::size_t> m = c.members;
      for (std::size_t& i : m) i += offset;
      segs.push_back(std::move(m));
    }
    offset += second ? f.level1.centroids.size() : f.alive();
  }
  return segs;
}

std::vector<ad::RowMix> stacked_mix(std::span<const FrameTopology> frames, bool second) {
  std::vector<ad::RowMix> mix;
  std::size_t offset = 0;
  for (const FrameTopology& f : frames) {
    for (ad::RowMix m : second ? f.up_2_to_1 : f.up_1_to_0) {
      for (std::size_t& s : m.sources) s += offset;
      mix.push_back(std::move(m));
    }
    offset += second ? f.level2->centroids.size() : f.level1.centroids.size();
  }
  return mix;
}

void validate(const SeaParams& params, ad::Var features, std::span<const FrameTopology> frames) {
  if (frames.empty()) throw Error("sea_extract: empty batch");
  std::size_t rows = 0;
  for (const FrameTopology& f : frames) {
    if (f.alive() == 0) throw Error("sea_extract: frame has no alive agents");
    if ((params.config.mode == SeaMode::full) != f.level2.has_value()) {
      throw Error("sea_extract: topology was built for a different mode");
    }
    rows += f.alive();
  }
  if (features.rows() != rows) {
    throw Error("sea_extract: " + std::to_string(features.rows()) + " feature rows for " +
                std::to_string(rows) + " alive agents");
  }
  if (features.cols() != params.config.in_dim) {
    throw Error("sea_extract: feature width " + std::to_string(features.cols()) + ", expected " +
                std::to_string(params.config.in_dim));
  }
}

Encoded encode(ad::Tape& tape, SeaParams& params, ad::Var features, std::span<const FrameTopology> frames) {
  Encoded e;
  ad::Var b1 = params.beta1.forward(tape, features);
  e.level1 = params.phi1.forward(tape, ad::segment_max(b1, stacked_segments(frames, false)));
  if (params.config.mode == SeaMode::full) {
    ad::Var b2 = params.beta2.forward(tape, e.level1);
    e.level2 = params.phi2.forward(tape, ad::segment_max(b2, stacked_segments(frames, true)));
  }
  return e;
}

}  // namespace

ad::Var sea_forward(ad::Tape& tape, SeaParams& params, ad::Var features, std::span<const FrameTopology> frames) {
  validate(params, features, frames);
  const Encoded e = encode(tape, params, features, frames);
  ad::Var level1 = e.level1;
  if (e.level2) {
    ad::Var up = ad::mix_rows(*e.level2, stacked_mix(frames, true));
    level1 = params.decode2.forward(tape, ad::concat_cols(up, e.level1));
  }
  ad::Var up0 = ad::mix_rows(level1, stacked_mix(frames, false));
  ad::Var decoded = params.decode1.forward(tape, ad::concat_cols(up0, features));
  return ad::add(decoded, features);
}

namespace {

struct AliveFrame {
  std::vector<Vec2> coords;
  ad::Matrix features;
};

AliveFrame alive_rows(std::span<const AgentPoint> frame, std::size_t in_dim) {
  AliveFrame out;
  std::vector<double> flat;
  for (const AgentPoint& a : frame) {
    if (a.features.size() != in_dim) {
      throw Error("sea_extract: agent feature length " + std::to_string(a.features.size()) + ", expected " +
                  std::to_string(in_dim));
    }
    if (!a.alive) continue;
    out.coords.push_back(a.coords);
    flat.insert(flat.end(), a.features.begin(), a.features.end());
  }
  if (out.coords.empty()) throw Error("sea_extract: frame has no alive agents");
  out.features = ad::Matrix(out.coords.size(), in_dim, std::move(flat));
  return out;
}

}  // namespace

ad::Matrix sea_extract(std::span<const AgentPoint> frame, SeaParams& params) {
  AliveFrame af = alive_rows(frame, params.config.in_dim);
  const FrameTopology topo = build_topology(af.coords, params.config);
  ad::Tape tape;
  ad::Var x = tape.constant(std::move(af.features));
  return sea_forward(tape, params, x, std::span<const FrameTopology>(&topo, 1)).value();
}

std::vector<LevelSet> sea_levels(std::span<const AgentPoint> frame, SeaParams& params) {
  AliveFrame af = alive_rows(frame, params.config.in_dim);
  const FrameTopology topo = build_topology(af.coords, params.config);
  ad::Tape tape;
  ad::Var x = tape.constant(af.features);
  const Encoded e = encode(tape, params, x, std::span<const FrameTopology>(&topo, 1));
  std::vector<LevelSet> out;
  out.push_back(LevelSet{0, topo.coords, af.features, {}});
  out.push_back(LevelSet{1, topo.level1.coords, e.level1.value(), topo.level1.clusters});
  if (e.level2) out.push_back(LevelSet{2, topo.level2->coords, e.level2->value(), topo.level2->clusters});
  return out;
}

std::string topology_json(const FrameTopology& topo, int indent) {
  using nlohmann::json;
  auto coords_json = [](const std::vector<Vec2>& cs) {
    json a = json::array();
    for (const Vec2& c : cs) a.push_back({c.x, c.y});
    return a;
  };
  auto level_json = [&](const LevelTopology& lt) {
    json clusters = json::array();
    for (const Cluster& c : lt.clusters) clusters.push_back({{"centroid", c.centroid}, {"members", c.members}});
    return json{{"centroids", lt.centroids}, {"coords", coords_json(lt.coords)}, {"clusters", clusters}};
  };
  auto mix_json = [](const std::vector<ad::RowMix>& mix) {
    json a = json::array();
    for (const ad::RowMix& m : mix) a.push_back({{"sources", m.sources}, {"weights", m.weights}});
    return a;
  };
  json j;
  j["agents"] = topo.agents;
  j["coords"] = coords_json(topo.coords);
  j["level1"] = level_json(topo.level1);
  if (topo.level2) {
    j["level2"] = level_json(*topo.level2);
    j["interp_2_to_1"] = mix_json(topo.up_2_to_1);
  }
  j["interp_1_to_0"] = mix_json(topo.up_1_to_0);
  return j.dump(indent);
}

}  // namespace sea::spatial
