#include "sea/env/gather.hpp"

#include <algorithm>
#include <numeric>

#include "state_text.hpp"

namespace sea::env {
namespace {

constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {1, -1, 0, 0};

bool in_grid(const GatherConfig& c, Cell p) { return p.x >= 0 && p.y >= 0 && p.x < c.width && p.y < c.height; }

Cell neighbour(Cell p, int dir) { return {p.x + kDx[dir], p.y + kDy[dir]}; }

// Cell occupancy: -1 empty, agent index >= 0, or food marker.
constexpr int kEmpty = -1;
constexpr int kFoodBase = -2;  // food j is stored as kFoodBase - j

struct Grid {
  const GatherConfig& c;
  std::vector<int> cells;
  explicit Grid(const MiniGatherState& s) : c(s.config), cells(static_cast<std::size_t>(c.width * c.height), kEmpty) {
    for (std::size_t i = 0; i < s.agents.size(); ++i)
      if (s.agents[i].alive) at(s.agents[i].cell) = static_cast<int>(i);
    for (std::size_t j = 0; j < s.food.size(); ++j) at(s.food[j].cell) = kFoodBase - static_cast<int>(j);
  }
  int& at(Cell p) { return cells[static_cast<std::size_t>(p.y * c.width + p.x)]; }
};

void validate(const GatherConfig& c) {
  if (c.width < 1 || c.height < 1) throw Error("gather_reset: grid must be at least 1x1");
  if (c.n_agents < 1) throw Error("gather_reset: n_agents must be at least 1");
  if (c.food_hits < 1) throw Error("gather_reset: food_hits must be at least 1");
  if (c.view_radius < 0) throw Error("gather_reset: view_radius must be non-negative");
  const auto cells = static_cast<std::size_t>(c.width) * static_cast<std::size_t>(c.height);
  if (c.n_agents + c.n_food > cells) {
    throw Error("gather_reset: cannot place " + std::to_string(c.n_agents) + " agents and " +
                std::to_string(c.n_food) + " food on " + std::to_string(cells) + " cells");
  }
}

}  // namespace

std::size_t gather_obs_dim(const GatherConfig& c) {
  const auto side = static_cast<std::size_t>(2 * c.view_radius + 1);
  return side * side * 2 + 3;
}

StepResult gather_observe(const MiniGatherState& s) {
  const GatherConfig& c = s.config;
  const std::size_t n = s.agents.size();
  StepResult out;
  out.observations = Matrix(n, gather_obs_dim(c));
  out.rewards.assign(n, 0.0);
  out.alive.resize(n);
  out.coords.resize(n);
  Grid grid(s);
  const int r = c.view_radius;
  for (std::size_t i = 0; i < n; ++i) {
    const GatherAgent& a = s.agents[i];
    out.alive[i] = a.alive ? 1 : 0;
    out.coords[i] = {static_cast<double>(a.cell.x), static_cast<double>(a.cell.y)};
    if (!a.alive) continue;
    auto row = out.observations.row_span(i);
    std::size_t k = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const Cell p{a.cell.x + dx, a.cell.y + dy};
        double food = 0.0, agent = 0.0;
        if (!in_grid(c, p)) {
          agent = -1.0;
        } else {
          const int occ = grid.at(p);
          if (occ <= kFoodBase) {
            food = static_cast<double>(s.food[static_cast<std::size_t>(kFoodBase - occ)].hits_left) / c.food_hits;
          } else if (occ >= 0 && static_cast<std::size_t>(occ) != i) {
            agent = 1.0;
          }
        }
        row[k++] = food;
        row[k++] = agent;
      }
    }
    row[k++] = a.hp / c.hp_max;
    row[k++] = c.width > 1 ? static_cast<double>(a.cell.x) / (c.width - 1) : 0.0;
    row[k++] = c.height > 1 ? static_cast<double>(a.cell.y) / (c.height - 1) : 0.0;
  }
  std::size_t alive = out.alive_count();
  out.done = s.step >= c.max_steps || s.food.empty() || alive == 0;
  return out;
}

GatherReset gather_reset(const GatherConfig& config, std::uint64_t seed, const std::optional<GatherLayout>& layout) {
  validate(config);
  MiniGatherState s;
  s.config = config;
  s.rng.seed(seed);
  std::vector<Cell> agent_cells, food_cells;
  if (layout) {
    if (layout->agents.size() != config.n_agents || layout->food.size() != config.n_food)
      throw Error("gather_reset: layout does not match agent/food counts");
    agent_cells = layout->agents;
    food_cells = layout->food;
    std::vector<Cell> all = agent_cells;
    all.insert(all.end(), food_cells.begin(), food_cells.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!in_grid(config, all[i])) throw Error("gather_reset: layout cell outside the grid");
      for (std::size_t j = 0; j < i; ++j)
        if (all[i] == all[j]) throw Error("gather_reset: layout places two objects on one cell");
    }
  } else {
    std::vector<int> order(static_cast<std::size_t>(config.width * config.height));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), s.rng);
    auto cell = [&](std::size_t k) { return Cell{order[k] % config.width, order[k] / config.width}; };
    for (std::size_t i = 0; i < config.n_agents; ++i) agent_cells.push_back(cell(i));
    for (std::size_t j = 0; j < config.n_food; ++j) food_cells.push_back(cell(config.n_agents + j));
  }
  for (Cell p : agent_cells) s.agents.push_back({p, 0, config.hp_max, true});
  for (Cell p : food_cells) s.food.push_back({p, config.food_hits});
  StepResult r = gather_observe(s);
  return {std::move(s), std::move(r)};
}

StepResult gather_step(MiniGatherState& s, std::span<const int> actions) {
  const GatherConfig& c = s.config;
  const std::size_t n = s.agents.size();
  if (actions.size() != n) {
    throw Error("gather_step: expected " + std::to_string(n) + " actions, got " + std::to_string(actions.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int a = actions[i];
    if (!s.agents[i].alive) {
      if (a != kNoAction) throw Error("gather_step: action given for dead agent " + std::to_string(i));
    } else if (a < 0 || a >= static_cast<int>(kGatherActions)) {
      throw Error("gather_step: invalid action " + std::to_string(a) + " for agent " + std::to_string(i));
    }
  }
  if (gather_observe(s).done) throw Error("gather_step: episode already finished");

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (s.agents[i].alive) order.push_back(i);
  std::shuffle(order.begin(), order.end(), s.rng);

  std::vector<double> reward(n, 0.0);
  Grid grid(s);

  for (std::size_t i : order) {
    const int a = actions[i];
    if (a < kMoveUp || a > kMoveRight) continue;
    GatherAgent& ag = s.agents[i];
    const int dir = a - kMoveUp;
    ag.heading = dir;
    const Cell to = neighbour(ag.cell, dir);
    if (!in_grid(c, to) || grid.at(to) != kEmpty) continue;
    grid.at(ag.cell) = kEmpty;
    grid.at(to) = static_cast<int>(i);
    ag.cell = to;
  }

  std::vector<std::uint8_t> food_gone(s.food.size(), 0);
  for (std::size_t i : order) {
    const int a = actions[i];
    if (a < kAttackUp) continue;
    GatherAgent& ag = s.agents[i];
    const int dir = a - kAttackUp;
    ag.heading = dir;
    reward[i] += c.attack_cost;
    const Cell target = neighbour(ag.cell, dir);
    if (!in_grid(c, target)) continue;
    const int occ = grid.at(target);
    if (occ <= kFoodBase) {
      const auto j = static_cast<std::size_t>(kFoodBase - occ);
      Food& f = s.food[j];
      --f.hits_left;
      ++s.hits_landed;
      if (f.hits_left == 0) {
        reward[i] += c.eat_reward;
        food_gone[j] = 1;
        grid.at(target) = kEmpty;
        ++s.absorbed;
      } else {
        reward[i] += c.hit_reward;
      }
    } else if (occ >= 0) {
      s.agents[static_cast<std::size_t>(occ)].hp -= c.damage;
    }
  }

  for (std::size_t i : order) {
    GatherAgent& ag = s.agents[i];
    if (ag.hp <= 0.0) {
      ag.alive = false;
      reward[i] += c.death_penalty;
      ++s.deaths;
    } else {
      ag.hp = std::min(c.hp_max, ag.hp + c.hp_regen);
    }
  }

  std::vector<Food> kept;
  for (std::size_t j = 0; j < s.food.size(); ++j)
    if (!food_gone[j]) kept.push_back(s.food[j]);
  s.food = std::move(kept);
  ++s.step;

  StepResult r = gather_observe(s);
  r.rewards = std::move(reward);
  return r;
}

StepResult MiniGatherEnv::reset(std::uint64_t seed) {
  auto r = gather_reset(config_, seed);
  state_ = std::move(r.state);
  return std::move(r.result);
}

StepResult MiniGatherEnv::step(const Matrix& actions) {
  if (actions.rows() != config_.n_agents || actions.cols() != 1) {
    throw Error("gather_step: actions must be " + std::to_string(config_.n_agents) + "x1, got " +
                actions.shape_string());
  }
  std::vector<int> a(config_.n_agents, kNoAction);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (state_.agents[i].alive) a[i] = static_cast<int>(actions(i, 0));
  return gather_step(state_, a);
}

std::string MiniGatherEnv::save_state() const {
  detail::StateWriter w;
  const MiniGatherState& s = state_;
  w.put_int(static_cast<long long>(s.step))
      .put_int(static_cast<long long>(s.absorbed))
      .put_int(static_cast<long long>(s.deaths))
      .put_int(static_cast<long long>(s.hits_landed));
  w.put_int(static_cast<long long>(s.agents.size()));
  for (const GatherAgent& a : s.agents)
    w.put_int(a.cell.x).put_int(a.cell.y).put_int(a.heading).put(a.hp).put_int(a.alive ? 1 : 0);
  w.put_int(static_cast<long long>(s.food.size()));
  for (const Food& f : s.food) w.put_int(f.cell.x).put_int(f.cell.y).put_int(f.hits_left);
  w.put_text(rng_state(s.rng));
  return w.str();
}

void MiniGatherEnv::load_state(const std::string& text) {
  detail::StateReader r(text);
  MiniGatherState s;
  s.config = config_;
  s.step = static_cast<std::size_t>(r.get_int());
  s.absorbed = static_cast<std::size_t>(r.get_int());
  s.deaths = static_cast<std::size_t>(r.get_int());
  s.hits_landed = static_cast<std::size_t>(r.get_int());
  const auto n = static_cast<std::size_t>(r.get_int());
  if (n != config_.n_agents) throw Error("gather state: agent count does not match configuration");
  for (std::size_t i = 0; i < n; ++i) {
    GatherAgent a;
    a.cell.x = static_cast<int>(r.get_int());
    a.cell.y = static_cast<int>(r.get_int());
    a.heading = static_cast<int>(r.get_int());
    a.hp = r.get();
    a.alive = r.get_int() != 0;
    s.agents.push_back(a);
  }
  const auto m = static_cast<std::size_t>(r.get_int());
  for (std::size_t j = 0; j < m; ++j) {
    Food f;
    f.cell.x = static_cast<int>(r.get_int());
    f.cell.y = static_cast<int>(r.get_int());
    f.hits_left = static_cast<int>(r.get_int());
    s.food.push_back(f);
  }
  set_rng_state(s.rng, r.get_text());
  state_ = std::move(s);
}

}  // namespace sea::env
