#pragma once

// Actor and critic networks.
//
// The actor is one network shared by every agent and only ever receives the
// acting agent's own observation row. The critic maps per-agent features
// (observation, plus the action for action-value critics) to one value per
// agent, optionally after a spatial encoder-decoder that mixes information
// between nearby agents.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sea/ad/mlp.hpp"
#include "sea/env/environment.hpp"
#include "sea/rl/batch.hpp"
#include "sea/spatial/sea.hpp"

namespace sea::rl {

enum class CriticKind { plain, sea_full, sea_global, sea_local };
std::string to_string(CriticKind k);
CriticKind critic_kind_from_string(const std::string& s);
bool uses_sea(CriticKind k);
spatial::SeaMode sea_mode_of(CriticKind k);

// gaussian: mean + learned log-std; categorical: logits;
// deterministic: tanh output (continuous) or softmax probabilities (discrete).
enum class PolicyKind { gaussian, categorical, deterministic };

struct NetworkConfig {
  CriticKind critic = CriticKind::plain;
  std::size_t actor_hidden = 64;
  std::size_t actor_depth = 2;
  std::size_t critic_hidden = 64;
  std::size_t critic_depth = 2;
  std::size_t sea_level1_width = 32;
  std::size_t sea_level2_width = 64;
  std::size_t sea_depth = 2;
  std::size_t sea_cluster_size = 0;
  std::size_t sea_interp_neighbors = 3;
  double sea_distance_power = 2.0;
  double init_log_std = -0.5;
};

class Actor {
 public:
  Actor(PolicyKind kind, env::ActionSpec spec, std::size_t obs_dim, const NetworkConfig& config, Rng& rng);

  PolicyKind kind() const { return kind_; }
  const env::ActionSpec& spec() const { return spec_; }
  // Width of one agent's action as fed to an action-value critic.
  std::size_t action_features() const { return spec_.size; }
  // Output per observation row: mean, logits, or deterministic action.
  ad::Var forward(ad::Tape& tape, ad::Var obs);
  Matrix evaluate(const Matrix& obs) const;
  ad::Parameter& log_std() { return log_std_; }
  std::vector<ad::Parameter*> parameters();
  ad::Mlp& net() { return net_; }

 private:
  PolicyKind kind_;
  env::ActionSpec spec_;
  ad::Mlp net_;
  ad::Parameter log_std_;
};

class Critic {
 public:
  // `in_dim` is the per-agent feature width the critic consumes.
  Critic(CriticKind kind, std::size_t in_dim, const NetworkConfig& config, Rng& rng, const std::string& name);

  CriticKind kind() const { return kind_; }
  std::size_t in_dim() const { return in_dim_; }
  const spatial::SeaConfig& sea_config() const { return sea_->config; }
  // Coordinates-only grouping for one frame; empty for the plain kind.
  spatial::FrameTopology topology(const Frame& frame) const;
  // `features` stacks the alive agents of each frame ([Σ alive × in_dim]);
  // returns one value per row.
  ad::Var forward(ad::Tape& tape, ad::Var features, std::span<const spatial::FrameTopology> frames);
  // Per-agent hidden features (before the value head) for one frame of AgentPoints.
  Matrix hidden(std::span<const spatial::AgentPoint> frame);
  std::vector<ad::Parameter*> parameters();

 private:
  CriticKind kind_;
  std::size_t in_dim_;
  std::optional<spatial::SeaParams> sea_;
  ad::Mlp head_;
};

// Per-agent critic input for one frame: the features themselves for the
// plain kind, the spatial encoder-decoder output otherwise. Features are the
// observation, followed by the action when `actions` is given.
Matrix build_critic_input(std::span<const spatial::AgentPoint> frame, const Matrix* actions, Critic& critic);

struct NetworkBundle {
  std::unique_ptr<Actor> actor;
  std::unique_ptr<Critic> critic;
  std::unique_ptr<Actor> target_actor;     // DDPG only
  std::unique_ptr<Critic> target_critic;   // DDPG only
};

// target <- tau * online + (1 - tau) * target, parameter by parameter.
void soft_update(const std::vector<ad::Parameter*>& target, const std::vector<ad::Parameter*>& online, double tau);
void copy_parameters(const std::vector<ad::Parameter*>& target, const std::vector<ad::Parameter*>& online);

}  // namespace sea::rl
