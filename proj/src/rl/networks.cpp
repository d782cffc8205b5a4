#include "sea/rl/networks.hpp"

#include <algorithm>
#include <cmath>

namespace sea::rl {

using ad::Activation;
using ad::Mlp;
using ad::Tape;
using ad::Var;

std::string to_string(CriticKind k) {
  switch (k) {
    case CriticKind::plain: return "plain";
    case CriticKind::sea_full: return "sea";
    case CriticKind::sea_global: return "sea-global";
    case CriticKind::sea_local: return "sea-local";
  }
  return "?";
}

CriticKind critic_kind_from_string(const std::string& s) {
  if (s == "plain") return CriticKind::plain;
  if (s == "sea" || s == "sea-full") return CriticKind::sea_full;
  if (s == "sea-global") return CriticKind::sea_global;
  if (s == "sea-local") return CriticKind::sea_local;
  throw Error("critic: unknown kind '" + s + "' (expected plain, sea, sea-global or sea-local)");
}

bool uses_sea(CriticKind k) { return k != CriticKind::plain; }

spatial::SeaMode sea_mode_of(CriticKind k) {
  switch (k) {
    case CriticKind::sea_global: return spatial::SeaMode::global_only;
    case CriticKind::sea_local: return spatial::SeaMode::local_only;
    default: return spatial::SeaMode::full;
  }
}

// ---- actor -----------------------------------------------------------------

Actor::Actor(PolicyKind kind, env::ActionSpec spec, std::size_t obs_dim, const NetworkConfig& config, Rng& rng)
    : kind_(kind), spec_(spec) {
  if (spec.size == 0) throw Error("actor: action size must be positive");
  if (kind == PolicyKind::categorical && spec.kind != env::ActionKind::discrete)
    throw Error("actor: categorical policy needs a discrete action space");
  if (kind == PolicyKind::gaussian && spec.kind != env::ActionKind::continuous)
    throw Error("actor: gaussian policy needs a continuous action space");
  Activation out = Activation::identity;
  if (spec.kind == env::ActionKind::continuous) out = Activation::tanh;
  net_ = Mlp::make("actor", obs_dim, config.actor_hidden, spec.size, config.actor_depth, Activation::relu, out, rng);
  if (kind == PolicyKind::gaussian) log_std_ = ad::Parameter("actor.log_std", Matrix(1, spec.size, config.init_log_std));
}

Var Actor::forward(Tape& tape, Var obs) {
  Var out = net_.forward(tape, obs);
  if (kind_ == PolicyKind::deterministic && spec_.kind == env::ActionKind::discrete) out = ad::softmax(out);
  return out;
}

Matrix Actor::evaluate(const Matrix& obs) const {
  Matrix out = net_.evaluate(obs);
  if (kind_ == PolicyKind::deterministic && spec_.kind == env::ActionKind::discrete) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row_span(r);
      const double m = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (double& v : row) z += (v = std::exp(v - m));
      for (double& v : row) v /= z;
    }
  }
  return out;
}

std::vector<ad::Parameter*> Actor::parameters() {
  auto p = net_.parameters();
  if (kind_ == PolicyKind::gaussian) p.push_back(&log_std_);
  return p;
}

// ---- critic ----------------------------------------------------------------

Critic::Critic(CriticKind kind, std::size_t in_dim, const NetworkConfig& config, Rng& rng, const std::string& name)
    : kind_(kind), in_dim_(in_dim) {
  if (in_dim == 0) throw Error("critic: input width must be positive");
  if (uses_sea(kind)) {
    spatial::SeaConfig sc;
    sc.in_dim = in_dim;
    sc.level1_width = config.sea_level1_width;
    sc.level2_width = config.sea_level2_width;
    sc.depth = config.sea_depth;
    sc.cluster_size = config.sea_cluster_size;
    sc.interp_neighbors = config.sea_interp_neighbors;
    sc.distance_power = config.sea_distance_power;
    sc.mode = sea_mode_of(kind);
    sea_ = spatial::SeaParams::create(sc, name + ".sea", rng);
  }
  head_ = Mlp::make(name + ".head", in_dim, config.critic_hidden, 1, config.critic_depth, Activation::relu,
                    Activation::identity, rng);
}

spatial::FrameTopology Critic::topology(const Frame& frame) const {
  if (!sea_) return {};
  if (frame.coords.size() != frame.alive.size())
    throw Error("critic: spatial critic needs coordinates for every agent");
  return spatial::build_topology(frame.coords, frame.alive, sea_->config);
}

Var Critic::forward(Tape& tape, Var features, std::span<const spatial::FrameTopology> frames) {
  if (features.cols() != in_dim_) {
    throw Error("critic: feature width " + std::to_string(features.cols()) + ", expected " + std::to_string(in_dim_));
  }
  Var h = sea_ ? spatial::sea_forward(tape, *sea_, features, frames) : features;
  return head_.forward(tape, h);
}

Matrix Critic::hidden(std::span<const spatial::AgentPoint> frame) {
  if (sea_) return spatial::sea_extract(frame, *sea_);
  std::vector<const spatial::AgentPoint*> alive;
  for (const auto& p : frame)
    if (p.alive) alive.push_back(&p);
  Matrix out(alive.size(), in_dim_);
  for (std::size_t r = 0; r < alive.size(); ++r) {
    if (alive[r]->features.size() != in_dim_) throw Error("critic: feature width does not match");
    std::copy(alive[r]->features.begin(), alive[r]->features.end(), out.row_span(r).begin());
  }
  return out;
}

std::vector<ad::Parameter*> Critic::parameters() {
  std::vector<ad::Parameter*> p;
  if (sea_) p = sea_->parameters();
  for (auto* q : head_.parameters()) p.push_back(q);
  return p;
}

Matrix build_critic_input(std::span<const spatial::AgentPoint> frame, const Matrix* actions, Critic& critic) {
  if (!actions) return critic.hidden(frame);
  if (actions->rows() != frame.size()) throw Error("build_critic_input: need one action row per agent");
  std::vector<spatial::AgentPoint> joined(frame.begin(), frame.end());
  for (std::size_t i = 0; i < joined.size(); ++i) {
    auto a = actions->row_span(i);
    joined[i].features.insert(joined[i].features.end(), a.begin(), a.end());
  }
  return critic.hidden(joined);
}

void soft_update(const std::vector<ad::Parameter*>& target, const std::vector<ad::Parameter*>& online, double tau) {
  if (target.size() != online.size()) throw Error("soft_update: parameter lists differ in length");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i]->value.values();
    const auto& o = online[i]->value.values();
    if (t.size() != o.size()) throw Error("soft_update: shape mismatch at " + target[i]->name);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = tau * o[k] + (1.0 - tau) * t[k];
  }
}

void copy_parameters(const std::vector<ad::Parameter*>& target, const std::vector<ad::Parameter*>& online) {
  if (target.size() != online.size()) throw Error("copy_parameters: parameter lists differ in length");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i]->value.rows() != online[i]->value.rows() || target[i]->value.cols() != online[i]->value.cols())
      throw Error("copy_parameters: shape mismatch at " + target[i]->name);
    target[i]->value = online[i]->value;
  }
}

}  // namespace sea::rl
