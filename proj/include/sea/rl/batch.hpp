#pragma once

// Experience containers shared by the trainers.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sea/ad/matrix.hpp"
#include "sea/env/environment.hpp"
#include "sea/rng.hpp"

namespace sea::rl {

using ad::Matrix;
using spatial::Vec2;

// What every agent sees at one instant, plus where it stands.
struct Frame {
  Matrix obs;                        // n_agents × obs_dim
  std::vector<Vec2> coords;          // n_agents
  std::vector<std::uint8_t> alive;   // n_agents

  std::size_t n_agents() const { return alive.size(); }
  std::size_t alive_count() const;
  // Original indices of the alive agents, ascending.
  std::vector<std::size_t> alive_indices() const;
};

Frame frame_from(const env::StepResult& result);

struct RolloutStep {
  Frame frame;                       // observation the actions were chosen from
  Matrix actions;                    // n_agents × action width (discrete: choice in column 0)
  std::vector<double> log_probs;     // behaviour log-probabilities, per agent
  std::vector<double> rewards;       // per agent
  std::vector<double> values;        // critic estimates for `frame`, per agent
  bool done = false;                 // the episode ended with this step
};

// Consecutive on-policy steps from one policy version. `bootstrap` is the
// frame following the last step. An agent's return stops (terminal) when the
// episode ends or the agent is dead in the following frame.
struct RolloutBatch {
  std::vector<RolloutStep> steps;
  Frame bootstrap;
  std::vector<double> bootstrap_values;

  const Frame& next_frame(std::size_t t) const { return t + 1 < steps.size() ? steps[t + 1].frame : bootstrap; }
  bool terminal(std::size_t t, std::size_t agent) const {
    return steps[t].done || !next_frame(t).alive[agent];
  }
  double next_value(std::size_t t, std::size_t agent) const {
    return t + 1 < steps.size() ? steps[t + 1].values[agent] : bootstrap_values[agent];
  }
};

struct Transition {
  Frame state;
  Matrix actions;                    // n_agents × action features (one-hot for discrete spaces)
  std::vector<double> rewards;
  Frame next;
  bool done = false;
};

// Fixed-capacity ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}
  void push(Transition t);
  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  const Transition& at(std::size_t i) const { return slots_[i]; }
  // Uniform sample with replacement from filled slots.
  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const;
  // Raw restore for checkpoints.
  void restore(std::vector<Transition> slots, std::size_t cursor);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace sea::rl
