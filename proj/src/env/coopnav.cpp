#include "sea/env/coopnav.hpp"

#include <algorithm>
#include <cmath>

#include "state_text.hpp"

namespace sea::env {

std::size_t coopnav_obs_dim(const CoopNavConfig& c) { return 4 + 2 * c.n_landmarks + 2 * (c.n_agents - 1); }

double coopnav_team_reward(const CoopNavConfig& config, std::span<const Vec2> positions,
                           std::span<const Vec2> landmarks) {
  double r = 0.0;
  for (const Vec2& l : landmarks) {
    double best = INFINITY;
    for (const Vec2& p : positions) best = std::min(best, std::hypot(p.x - l.x, p.y - l.y));
    r -= best;
  }
  const double touch = 2.0 * config.agent_radius;
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (std::hypot(positions[i].x - positions[j].x, positions[i].y - positions[j].y) < touch)
        r -= config.collision_penalty;
  return r;
}

StepResult coopnav_observe(const CoopNavState& s) {
  const std::size_t n = s.config.n_agents;
  StepResult out;
  out.observations = Matrix(n, coopnav_obs_dim(s.config));
  out.rewards.assign(n, 0.0);
  out.alive.assign(n, 1);
  out.coords = s.positions;
  out.done = s.step >= s.config.max_steps;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.observations.row_span(i);
    std::size_t k = 0;
    const Vec2 p = s.positions[i];
    row[k++] = s.velocities[i].x;
    row[k++] = s.velocities[i].y;
    row[k++] = p.x;
    row[k++] = p.y;
    for (const Vec2& l : s.landmarks) {
      row[k++] = l.x - p.x;
      row[k++] = l.y - p.y;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row[k++] = s.positions[j].x - p.x;
      row[k++] = s.positions[j].y - p.y;
    }
  }
  return out;
}

CoopNavReset coopnav_reset(const CoopNavConfig& config, std::uint64_t seed) {
  if (config.n_agents < 1) throw Error("coopnav_reset: n_agents must be at least 1");
  if (config.n_landmarks < 1) throw Error("coopnav_reset: n_landmarks must be at least 1");
  if (config.max_steps < 1) throw Error("coopnav_reset: max_steps must be at least 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-config.arena, config.arena);
  CoopNavState s;
  s.config = config;
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    s.positions.push_back({x, y});
  }
  s.velocities.assign(config.n_agents, Vec2{});
  for (std::size_t i = 0; i < config.n_landmarks; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    s.landmarks.push_back({x, y});
  }
  StepResult r = coopnav_observe(s);
  return {std::move(s), std::move(r)};
}

StepResult coopnav_step(CoopNavState& s, std::span<const Vec2> forces) {
  const CoopNavConfig& c = s.config;
  if (forces.size() != c.n_agents) {
    throw Error("coopnav_step: expected " + std::to_string(c.n_agents) + " actions, got " +
                std::to_string(forces.size()));
  }
  if (s.step >= c.max_steps) throw Error("coopnav_step: episode already finished");
  for (std::size_t i = 0; i < c.n_agents; ++i) {
    const double fx = std::clamp(forces[i].x, -1.0, 1.0);
    const double fy = std::clamp(forces[i].y, -1.0, 1.0);
    Vec2& v = s.velocities[i];
    Vec2& p = s.positions[i];
    v.x = c.damping * v.x + fx * c.dt;
    v.y = c.damping * v.y + fy * c.dt;
    p.x = std::clamp(p.x + v.x * c.dt, -c.arena, c.arena);
    p.y = std::clamp(p.y + v.y * c.dt, -c.arena, c.arena);
  }
  ++s.step;
  StepResult r = coopnav_observe(s);
  r.rewards.assign(c.n_agents, coopnav_team_reward(c, s.positions, s.landmarks));
  return r;
}

StepResult CoopNavEnv::reset(std::uint64_t seed) {
  auto r = coopnav_reset(config_, seed);
  state_ = std::move(r.state);
  return std::move(r.result);
}

StepResult CoopNavEnv::step(const Matrix& actions) {
  if (actions.rows() != config_.n_agents || actions.cols() != 2) {
    throw Error("coopnav_step: actions must be " + std::to_string(config_.n_agents) + "x2, got " +
                actions.shape_string());
  }
  std::vector<Vec2> f(config_.n_agents);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = {actions(i, 0), actions(i, 1)};
  return coopnav_step(state_, f);
}

std::string CoopNavEnv::save_state() const {
  detail::StateWriter w;
  w.put_int(static_cast<long long>(state_.step));
  w.put_int(static_cast<long long>(state_.positions.size()));
  for (std::size_t i = 0; i < state_.positions.size(); ++i) {
    w.put(state_.positions[i].x).put(state_.positions[i].y);
    w.put(state_.velocities[i].x).put(state_.velocities[i].y);
  }
  w.put_int(static_cast<long long>(state_.landmarks.size()));
  for (const Vec2& l : state_.landmarks) w.put(l.x).put(l.y);
  return w.str();
}

void CoopNavEnv::load_state(const std::string& text) {
  detail::StateReader r(text);
  CoopNavState s;
  s.config = config_;
  s.step = static_cast<std::size_t>(r.get_int());
  const auto n = static_cast<std::size_t>(r.get_int());
  if (n != config_.n_agents) throw Error("coopnav state: agent count does not match configuration");
  for (std::size_t i = 0; i < n; ++i) {
    const double px = r.get(), py = r.get(), vx = r.get(), vy = r.get();
    s.positions.push_back({px, py});
    s.velocities.push_back({vx, vy});
  }
  const auto l = static_cast<std::size_t>(r.get_int());
  if (l != config_.n_landmarks) throw Error("coopnav state: landmark count does not match configuration");
  for (std::size_t i = 0; i < l; ++i) {
    const double x = r.get(), y = r.get();
    s.landmarks.push_back({x, y});
  }
  state_ = std::move(s);
}

}  // namespace sea::env
