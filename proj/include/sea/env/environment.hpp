#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "sea/ad/matrix.hpp"
#include "sea/spatial/geometry.hpp"

namespace sea::env {

using ad::Matrix;
using spatial::Vec2;

struct StepResult {
  Matrix observations;               // n_agents × obs_dim; zero rows for dead agents
  std::vector<double> rewards;       // per agent; zero for agents dead at step start
  std::vector<std::uint8_t> alive;   // after the step
  std::vector<Vec2> coords;          // per agent
  bool done = false;

  std::size_t alive_count() const;
};

enum class ActionKind { continuous, discrete };

struct ActionSpec {
  ActionKind kind = ActionKind::continuous;
  std::size_t size = 0;  // vector length (continuous) or number of choices (discrete)
};

// Episode counters reported by run_eval.
struct EpisodeCounters {
  std::size_t absorbed = 0;
  std::size_t deaths = 0;
};

// Common interface the trainers drive. Actions are an n_agents × d matrix:
// d = action size for continuous spaces, d = 1 (choice index) for discrete
// spaces. Rows of dead agents are ignored.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual StepResult reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Matrix& actions) = 0;
  // Current observation without advancing (rewards are zero).
  virtual StepResult observe() const = 0;
  virtual std::size_t n_agents() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual ActionSpec action_spec() const = 0;
  virtual std::string name() const = 0;
  virtual EpisodeCounters counters() const { return {}; }
  // Exact text snapshot of the full dynamic state (including internal generators).
  virtual std::string save_state() const = 0;
  virtual void load_state(const std::string& state) = 0;
};

// Line-delimited trajectory records: one JSON object per environment step.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) {}
  void write(std::size_t step, const StepResult& result, const Matrix& actions);

 private:
  std::ostream& out_;
};

}  // namespace sea::env
