#pragma once

// Training and evaluation loops.
//
// A run directory holds:
//   config.txt       the run's configuration, serialized
//   metrics.csv      one MetricRecord per evaluation, written as it happens
//   checkpoint.ckpt  networks, optimizers, generators, environment and
//                    replay state at the latest checkpoint (see docs/checkpoint.md)
//
// Seeding: every stream derives from the run seed. Network initialization,
// training randomness, training episodes and evaluation episodes use
// derive_seed(seed, 1..4). Evaluation replays the same episodes every time.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sea/ad/checkpoint.hpp"
#include "sea/harness/config.hpp"
#include "sea/harness/metrics.hpp"

namespace sea::harness {

struct EvalSummary {
  std::size_t episodes = 0;
  double return_mean = 0.0;   // over episodes of the per-agent mean episode return
  double return_min = 0.0;
  double return_max = 0.0;
  double alive_end_mean = 0.0;
  // MiniGather totals over all episodes (0 for CoopNav).
  std::size_t absorbed = 0;
  std::size_t deaths = 0;
  double ratio = 0.0;         // absorbed / deaths; absorbed when deaths == 0
  bool zero_deaths = false;   // set when the ratio fell back to the absorbed count
};

struct GatherRatio {
  double value = 0.0;
  bool zero_deaths = false;
};
GatherRatio gather_ratio(std::size_t absorbed, std::size_t deaths);

// Greedy rollouts of the learner's actor. Episode e resets with derive_seed(seed, e).
// When `topology_out` is set it receives the first frame's topology as JSON.
EvalSummary evaluate(rl::Learner& learner, const TrainRunConfig& config, std::size_t episodes, std::uint64_t seed,
                     std::string* topology_out = nullptr);

struct RunOptions {
  bool resume = false;                     // continue from <out_dir>/checkpoint.ckpt
  std::optional<std::uint64_t> stop_at;    // stop once this many steps are done (checkpointing first)
  std::function<void(const MetricRecord&)> on_record;
};

struct TrainResult {
  std::vector<MetricRecord> records;       // full metric stream of the run directory
  std::filesystem::path checkpoint;
  EvalSummary final_eval;
  std::uint64_t steps = 0;
};

TrainResult run_training(const TrainRunConfig& config, const RunOptions& options = {});

// Loads a checkpoint and evaluates its actor greedily. `env_override`, when
// given, replaces the environment settings stored in the checkpoint; the
// actor must still fit the resulting observation and action shapes.
EvalSummary run_eval(const std::filesystem::path& checkpoint, std::size_t episodes, std::uint64_t seed,
                     const TrainRunConfig* env_override = nullptr);

// Runs independent configurations on parallel workers. Output directories must differ.
std::vector<TrainResult> run_many(const std::vector<TrainRunConfig>& configs);
// One run per seed, each writing to <out_dir>/seed_<seed>.
std::vector<TrainResult> run_sweep(const TrainRunConfig& base, const std::vector<std::uint64_t>& seeds);
// Parses "0,1,2", "0-4" or a mix such as "0-2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace sea::harness
