#pragma once

// MiniGather wrapper whose population shrinks on a fixed schedule: after the
// t-th step at most max(1, n - t * per_step) agents remain alive. Agents are
// removed highest index first, on top of any deaths from the game itself.

#include <algorithm>

#include "sea/env/gather.hpp"

namespace sea::testing {

class AttritionGather final : public env::Environment {
 public:
  AttritionGather(env::GatherConfig config, std::size_t per_step) : inner_(config), per_step_(per_step) {}

  env::StepResult reset(std::uint64_t seed) override {
    t_ = 0;
    return inner_.reset(seed);
  }

  env::StepResult step(const env::Matrix& actions) override {
    env::StepResult r = inner_.step(actions);
    ++t_;
    auto& agents = inner_.state().agents;
    const std::size_t n = agents.size();
    const std::size_t cap = n > t_ * per_step_ ? n - t_ * per_step_ : 1;
    std::size_t alive = 0;
    for (const auto& a : agents) alive += a.alive ? 1 : 0;
    for (std::size_t i = n; i-- > 0 && alive > cap;) {
      if (agents[i].alive) {
        agents[i].alive = false;
        --alive;
      }
    }
    env::StepResult out = env::gather_observe(inner_.state());
    out.rewards = r.rewards;
    return out;
  }

  env::StepResult observe() const override { return inner_.observe(); }
  std::size_t n_agents() const override { return inner_.n_agents(); }
  std::size_t obs_dim() const override { return inner_.obs_dim(); }
  env::ActionSpec action_spec() const override { return inner_.action_spec(); }
  std::string name() const override { return "gather-attrition"; }
  std::string save_state() const override { return inner_.save_state(); }
  void load_state(const std::string& s) override { inner_.load_state(s); }

 private:
  env::MiniGatherEnv inner_;
  std::size_t per_step_;
  std::size_t t_ = 0;
};

inline env::GatherConfig attrition_config(std::size_t agents = 64) {
  env::GatherConfig c;
  c.width = 12;
  c.height = 12;
  c.n_agents = agents;
  c.n_food = 30;
  c.max_steps = agents + 10;
  c.view_radius = 1;
  return c;
}

}  // namespace sea::testing
