#pragma once

// A2C, PPO and DDPG for homogeneous agents under centralized training with
// decentralized execution.
//
// Agents that are dead in a frame are dropped before any network sees the
// frame, so they contribute nothing to any loss and cannot influence the
// alive agents. Losses average over alive (frame, agent) entries.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sea/ad/adam.hpp"
#include "sea/env/environment.hpp"
#include "sea/rl/batch.hpp"
#include "sea/rl/networks.hpp"

namespace sea::rl {

enum class Algorithm { a2c, ppo, ddpg };
std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct AlgoConfig {
  Algorithm algorithm = Algorithm::a2c;
  double gamma = 0.95;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double max_grad_norm = 0.5;         // 0 disables clipping
  // on-policy
  std::size_t rollout_length = 25;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  std::size_t ppo_epochs = 4;
  std::size_t ppo_minibatches = 4;
  // off-policy
  std::size_t buffer_capacity = 20000;
  std::size_t batch_size = 32;
  std::size_t warmup_steps = 1000;
  std::size_t update_every = 25;
  std::size_t updates_per_round = 5;
  double tau = 0.01;
  double noise_start = 0.3;
  double noise_end = 0.05;
  std::size_t noise_decay_steps = 100000;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::size_t samples = 0;            // alive (frame, agent) entries used
};

// Networks plus their optimizers. Owned by exactly one trainer.
struct Learner {
  AlgoConfig algo;
  NetworkConfig net;
  NetworkBundle nets;
  ad::Adam actor_opt;
  ad::Adam critic_opt;

  static Learner create(const AlgoConfig& algo, const NetworkConfig& net, std::size_t obs_dim,
                        env::ActionSpec spec, Rng& rng);
  // Per-agent critic feature width (observation, plus action features for DDPG).
  std::size_t critic_input_dim() const;
};

PolicyKind policy_kind_for(Algorithm a, env::ActionKind k);

// ---- acting ------------------------------------------------------------------

enum class ActMode { explore, greedy };

struct ActionChoice {
  Matrix env_actions;                 // what the environment consumes
  Matrix critic_actions;              // action features for action-value critics
  std::vector<double> log_probs;      // behaviour log-probabilities (stochastic policies)
};

// Each alive agent acts from its own observation row only. `noise` is the
// exploration scale for deterministic policies (Gaussian std for continuous,
// random-action probability for discrete).
ActionChoice select_actions(Actor& actor, const Frame& frame, ActMode mode, Rng& rng, double noise = 0.0);

// Linear decay from noise_start to noise_end over noise_decay_steps.
double exploration_noise(const AlgoConfig& config, std::size_t step);

// ---- estimators --------------------------------------------------------------

// Fills RolloutStep::values and bootstrap_values with the critic (0 for dead agents).
void fill_values(RolloutBatch& batch, Critic& critic);
// Bootstrapped discounted return per (step, agent), truncated at terminals.
std::vector<std::vector<double>> nstep_returns(const RolloutBatch& batch, double gamma);
// Generalized advantage estimates per (step, agent).
std::vector<std::vector<double>> gae_advantages(const RolloutBatch& batch, double gamma, double lambda);

// Per-entry clipped value loss: max((v - R)^2, (clip(v, v_old - eps, v_old + eps) - R)^2).
ad::Var ppo_value_terms(ad::Var v_new, const Matrix& v_old, const Matrix& returns, double eps);

// ---- updates -----------------------------------------------------------------

UpdateStats a2c_update(RolloutBatch& batch, Learner& learner);
UpdateStats ppo_update(RolloutBatch& batch, Learner& learner, Rng& rng);
UpdateStats ddpg_update(const std::vector<const Transition*>& samples, Learner& learner);
// DDPG actor objective -mean Q(h_i), with h_i built from the current actor's
// actions so the gradient reaches the actor through those actions.
ad::Var ddpg_actor_loss(ad::Tape& tape, Actor& actor, Critic& critic, const std::vector<const Transition*>& samples);

// ---- collection --------------------------------------------------------------

// Tracks the live episode between collection calls. Episode k is reset with
// derive_seed(base_seed, k).
struct RolloutCursor {
  std::uint64_t base_seed = 0;
  std::uint64_t episodes = 0;
  env::StepResult current;
  bool started = false;

  void ensure_started(env::Environment& env);
};

RolloutBatch collect_rollout(env::Environment& env, Learner& learner, RolloutCursor& cursor, std::size_t steps,
                             Rng& rng);
// Steps the environment with exploration noise and stores each transition.
void collect_transitions(env::Environment& env, Learner& learner, RolloutCursor& cursor, std::size_t steps,
                         double noise, Rng& rng, ReplayBuffer& buffer);

}  // namespace sea::rl
