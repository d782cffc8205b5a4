#pragma once

// Reduced food-gathering grid world.
//
// Agents and food occupy distinct cells of a W × H grid. Each step every
// alive agent chooses one of nine actions: noop, move up/down/left/right,
// attack up/down/left/right. Moves resolve one agent at a time in a seeded
// random order and are blocked by walls, agents and food. Attacks then
// resolve in the same order against the adjacent cell:
//   food  loses one hit; the attacker earns hit_reward, or eat_reward on the
//         hit that empties it (the food is then absorbed and removed)
//   agent loses `damage` HP
// Every attack costs attack_cost. After all attacks, agents at HP <= 0 die
// (death_penalty, cell cleared); survivors regenerate hp_regen up to hp_max.
// The episode ends after max_steps, when all food is gone, or when no agent
// is left.
//
// Observation per agent: a (2r+1)^2 window with two channels per cell
// (remaining food hits / food_hits; +1 other agent, -1 outside the grid),
// followed by HP / hp_max and the agent's cell normalized to [0, 1].

#include <optional>
#include <span>

#include "sea/env/environment.hpp"
#include "sea/rng.hpp"

namespace sea::env {

enum GatherAction : int {
  kNoAction = -1,  // placeholder for dead agents
  kNoop = 0,
  kMoveUp, kMoveDown, kMoveLeft, kMoveRight,
  kAttackUp, kAttackDown, kAttackLeft, kAttackRight,
};
inline constexpr std::size_t kGatherActions = 9;

struct GatherConfig {
  int width = 20;
  int height = 20;
  std::size_t n_agents = 16;
  std::size_t n_food = 40;
  std::size_t max_steps = 200;
  int view_radius = 2;
  int food_hits = 5;
  double hp_max = 10.0;
  double hp_regen = 0.1;
  double damage = 2.0;
  double eat_reward = 0.5;
  double hit_reward = 0.1;
  double death_penalty = -1.0;
  double attack_cost = -0.01;
};

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct GatherAgent {
  Cell cell;
  int heading = 0;  // last direction used, 0..3 = up, down, left, right
  double hp = 10.0;
  bool alive = true;
};

struct Food {
  Cell cell;
  int hits_left = 5;
};

struct MiniGatherState {
  GatherConfig config;
  std::vector<GatherAgent> agents;
  std::vector<Food> food;   // only food that is still present
  std::size_t step = 0;
  std::size_t absorbed = 0;
  std::size_t deaths = 0;
  std::size_t hits_landed = 0;  // total food hits over the episode
  Rng rng;
};

// Optional fixed placement for tests; random placement when absent.
struct GatherLayout {
  std::vector<Cell> agents;
  std::vector<Cell> food;
};

std::size_t gather_obs_dim(const GatherConfig& config);

struct GatherReset {
  MiniGatherState state;
  StepResult result;
};

GatherReset gather_reset(const GatherConfig& config, std::uint64_t seed,
                         const std::optional<GatherLayout>& layout = std::nullopt);
// One action per agent; dead agents must pass kNoAction.
StepResult gather_step(MiniGatherState& state, std::span<const int> actions);
StepResult gather_observe(const MiniGatherState& state);

class MiniGatherEnv final : public Environment {
 public:
  explicit MiniGatherEnv(GatherConfig config) : config_(config) {}
  StepResult reset(std::uint64_t seed) override;
  StepResult step(const Matrix& actions) override;
  StepResult observe() const override { return gather_observe(state_); }
  std::size_t n_agents() const override { return config_.n_agents; }
  std::size_t obs_dim() const override { return gather_obs_dim(config_); }
  ActionSpec action_spec() const override { return {ActionKind::discrete, kGatherActions}; }
  std::string name() const override { return "gather"; }
  EpisodeCounters counters() const override { return {state_.absorbed, state_.deaths}; }
  std::string save_state() const override;
  void load_state(const std::string& state) override;
  const MiniGatherState& state() const { return state_; }
  MiniGatherState& state() { return state_; }

 private:
  GatherConfig config_;
  MiniGatherState state_;
};

}  // namespace sea::env
