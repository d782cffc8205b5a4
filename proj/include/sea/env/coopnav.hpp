#pragma once

// Cooperative navigation: N particles should cover L landmarks in a square
// arena while avoiding each other. Team reward each step:
//   -sum_l min_i |p_i - l|  -  collision_penalty × (# pairs closer than 2 × radius)
// Every agent receives the team reward.
//
// Observation per agent (length 4 + 2L + 2(N-1)):
//   own velocity (2), own position (2), landmark positions relative to self
//   (2 per landmark), other agents' positions relative to self (2 per agent,
//   ascending index, self skipped).

#include <span>

#include "sea/env/environment.hpp"
#include "sea/rng.hpp"

namespace sea::env {

struct CoopNavConfig {
  std::size_t n_agents = 6;
  std::size_t n_landmarks = 3;
  double arena = 1.0;            // half-width; positions live in [-arena, arena]^2
  double dt = 0.1;
  double damping = 0.5;
  double agent_radius = 0.05;
  double collision_penalty = 1.0;
  std::size_t max_steps = 25;
};

struct CoopNavState {
  CoopNavConfig config;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<Vec2> landmarks;
  std::size_t step = 0;
};

std::size_t coopnav_obs_dim(const CoopNavConfig& config);

struct CoopNavReset {
  CoopNavState state;
  StepResult result;
};

CoopNavReset coopnav_reset(const CoopNavConfig& config, std::uint64_t seed);
// One physics step with per-agent forces (clipped to [-1, 1]^2).
StepResult coopnav_step(CoopNavState& state, std::span<const Vec2> forces);
double coopnav_team_reward(const CoopNavConfig& config, std::span<const Vec2> positions,
                           std::span<const Vec2> landmarks);
StepResult coopnav_observe(const CoopNavState& state);

class CoopNavEnv final : public Environment {
 public:
  explicit CoopNavEnv(CoopNavConfig config) : config_(config) {}
  StepResult reset(std::uint64_t seed) override;
  StepResult step(const Matrix& actions) override;
  StepResult observe() const override { return coopnav_observe(state_); }
  std::size_t n_agents() const override { return config_.n_agents; }
  std::size_t obs_dim() const override { return coopnav_obs_dim(config_); }
  ActionSpec action_spec() const override { return {ActionKind::continuous, 2}; }
  std::string name() const override { return "coopnav"; }
  std::string save_state() const override;
  void load_state(const std::string& state) override;
  const CoopNavState& state() const { return state_; }
  CoopNavState& state() { return state_; }

 private:
  CoopNavConfig config_;
  CoopNavState state_;
};

}  // namespace sea::env
