#pragma once

// Spatially explicit encoder-decoder over a frame of located agents.
//
// Encoder: alive agents are level 0. Each level l picks N_l centroids by
// farthest point sampling, groups the K nearest points of the level below
// around each centroid, and summarizes every group as phi(max_i beta(f_i)).
// The summary sits at the centroid's coordinates and forms the next level.
//
// Decoder: features travel back down by inverse-distance interpolation from
// the level above, concatenated with the level's own features and passed
// through a per-level MLP. The level-0 output is added to the raw input
// features (residual), so output width equals input width.
//
// Modes:
//   full        two encoder levels sized by cluster_counts()
//   global_only one cluster holding every alive agent
//   local_only  the first encoder level only

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sea/ad/mlp.hpp"
#include "sea/spatial/geometry.hpp"

namespace sea::spatial {

enum class SeaMode { full, global_only, local_only };

std::string to_string(SeaMode m);
SeaMode sea_mode_from_string(const std::string& s);

struct AgentPoint {
  Vec2 coords;
  std::vector<double> features;
  bool alive = true;
};

struct SeaConfig {
  std::size_t in_dim = 0;
  std::size_t level1_width = 64;
  std::size_t level2_width = 128;
  std::size_t depth = 2;           // layers per MLP
  std::size_t cluster_size = 0;    // K; 0 selects default_cluster_size()
  std::size_t interp_neighbors = 3;
  double distance_power = 2.0;
  SeaMode mode = SeaMode::full;
};

struct SeaParams {
  SeaConfig config;
  ad::Mlp beta1, phi1;       // level 1 set abstraction
  ad::Mlp beta2, phi2;       // level 2 set abstraction (full mode only)
  ad::Mlp decode2;           // level 2 -> level 1 (full mode only)
  ad::Mlp decode1;           // level 1 -> level 0, output width in_dim

  static SeaParams create(const SeaConfig& config, const std::string& name, Rng& rng);
  std::vector<ad::Parameter*> parameters();
};

// Cluster structure of one encoder level over the points of the level below.
struct LevelTopology {
  std::vector<std::size_t> centroids;  // indices into the level below
  std::vector<Cluster> clusters;       // one per centroid
  std::vector<Vec2> coords;            // centroid coordinates
};

// Everything about a frame's grouping that depends only on coordinates.
struct FrameTopology {
  std::vector<std::size_t> agents;     // original indices of the alive agents, in input order
  std::vector<Vec2> coords;            // level-0 coordinates (alive agents)
  LevelTopology level1;
  std::optional<LevelTopology> level2;
  std::vector<ad::RowMix> up_2_to_1;   // rows: level-1 points, sources: level-2 points
  std::vector<ad::RowMix> up_1_to_0;   // rows: alive agents, sources: level-1 points

  std::size_t alive() const { return coords.size(); }
};

// Groups the alive points. `alive_coords` must be non-empty.
FrameTopology build_topology(std::span<const Vec2> alive_coords, const SeaConfig& config);
// Convenience: filters dead agents, then groups.
FrameTopology build_topology(std::span<const Vec2> coords, std::span<const std::uint8_t> alive,
                             const SeaConfig& config);

// Batched extractor. `features` stacks the alive agents of every frame in
// order ([sum_f alive_f × in_dim]); the result has the same shape.
ad::Var sea_forward(ad::Tape& tape, SeaParams& params, ad::Var features,
                    std::span<const FrameTopology> frames);

// Single-frame extractor over AgentPoints; returns one row per alive agent in input order.
ad::Matrix sea_extract(std::span<const AgentPoint> frame, SeaParams& params);

// Inspection view of one level after the encoder has run.
struct LevelSet {
  std::size_t level = 0;
  std::vector<Vec2> coords;
  ad::Matrix features;
  std::vector<Cluster> clusters;   // how this level was formed from the one below (empty at level 0)
};
std::vector<LevelSet> sea_levels(std::span<const AgentPoint> frame, SeaParams& params);

// Structured text dump (JSON) of a frame's grouping and interpolation weights.
// A negative indent gives a single line.
std::string topology_json(const FrameTopology& topo, int indent = -1);

}  // namespace sea::spatial
