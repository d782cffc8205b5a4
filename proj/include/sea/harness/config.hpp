#pragma once

// Run configuration and its flat text form.
//
// One `key = value` pair per line; `#` starts a comment; blank lines are
// ignored. Keys not mentioned keep their defaults. Reals are written with 17
// significant digits so a serialized config parses back to the same bits.
// docs/config.md lists every key.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sea/env/coopnav.hpp"
#include "sea/env/gather.hpp"
#include "sea/rl/algorithms.hpp"

namespace sea::harness {

enum class EnvKind { coopnav, gather };
std::string to_string(EnvKind k);
EnvKind env_kind_from_string(const std::string& s);

struct TrainRunConfig {
  EnvKind env = EnvKind::coopnav;
  env::CoopNavConfig coopnav;
  env::GatherConfig gather;
  rl::AlgoConfig algo;
  rl::NetworkConfig net;
  std::uint64_t total_steps = 200000;   // environment steps (joint actions)
  std::uint64_t seed = 0;
  std::uint64_t eval_interval = 10000;
  std::size_t eval_episodes = 10;
  std::size_t checkpoint_every = 0;     // evaluations between checkpoints; 0 = final only
  bool wall_clock = false;              // false writes 0 to the seconds column
  std::string dump_topology;            // JSON-lines topology dump path; empty = off
  std::string out_dir = "runs/run";

  friend bool operator==(const TrainRunConfig&, const TrainRunConfig&);
};

std::string serialize_config(const TrainRunConfig& config);
// Applies the pairs in `text` on top of `base`. Unknown keys and malformed
// values raise an Error naming the key and line.
TrainRunConfig parse_config(const std::string& text, TrainRunConfig base = {});
TrainRunConfig load_config(const std::string& path);
void set_config_value(TrainRunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const TrainRunConfig& config, const std::string& key);
std::vector<std::string> config_keys();
// Throws an Error naming the first invalid field.
void validate_config(const TrainRunConfig& config);

std::unique_ptr<env::Environment> make_environment(const TrainRunConfig& config);

}  // namespace sea::harness
