#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sea/env/coopnav.hpp"
#include "sea/env/gather.hpp"

using namespace sea;
using namespace sea::env;

namespace {

// Reference team reward written directly from the reward definition.
double coopnav_reward_oracle(const std::vector<Vec2>& agents, const std::vector<Vec2>& landmarks,
                             double radius, double penalty) {
  double total = 0.0;
  for (const Vec2& l : landmarks) {
    std::vector<double> d;
    for (const Vec2& a : agents) d.push_back(std::sqrt((a.x - l.x) * (a.x - l.x) + (a.y - l.y) * (a.y - l.y)));
    total -= *std::min_element(d.begin(), d.end());
  }
  int collisions = 0;
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double dx = agents[i].x - agents[j].x, dy = agents[i].y - agents[j].y;
      if (dx * dx + dy * dy < 4 * radius * radius) ++collisions;
    }
  return total - penalty * collisions;
}

std::vector<int> random_gather_actions(const MiniGatherState& s, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kGatherActions) - 1);
  std::vector<int> a(s.agents.size(), kNoAction);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (s.agents[i].alive) a[i] = pick(rng);
  return a;
}

// Rule-by-rule recomputation of one Gather step's rewards. The resolution
// order is the documented one: the alive agents shuffled by the state's
// generator. Occupancy is checked by linear scans rather than a grid.
std::vector<double> gather_reward_oracle(const MiniGatherState& before, const std::vector<int>& actions) {
  const GatherConfig& c = before.config;
  std::vector<GatherAgent> agents = before.agents;
  std::vector<Food> food = before.food;
  Rng rng = before.rng;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (agents[i].alive) order.push_back(i);
  std::shuffle(order.begin(), order.end(), rng);

  auto step_of = [](int dir) -> std::pair<int, int> {
    switch (dir) {
      case 0: return {0, 1};
      case 1: return {0, -1};
      case 2: return {-1, 0};
      default: return {1, 0};
    }
  };
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < c.width && y < c.height; };
  auto agent_at = [&](int x, int y) -> int {
    for (std::size_t k = 0; k < agents.size(); ++k)
      if (agents[k].alive && agents[k].cell.x == x && agents[k].cell.y == y) return static_cast<int>(k);
    return -1;
  };
  auto food_at = [&](int x, int y) -> int {
    for (std::size_t k = 0; k < food.size(); ++k)
      if (food[k].hits_left > 0 && food[k].cell.x == x && food[k].cell.y == y) return static_cast<int>(k);
    return -1;
  };

  std::vector<double> r(agents.size(), 0.0);
  for (std::size_t i : order) {
    const int a = actions[i];
    if (a < 1 || a > 4) continue;
    auto [dx, dy] = step_of(a - 1);
    const int x = agents[i].cell.x + dx, y = agents[i].cell.y + dy;
    if (inside(x, y) && agent_at(x, y) < 0 && food_at(x, y) < 0) agents[i].cell = {x, y};
  }
  for (std::size_t i : order) {
    const int a = actions[i];
    if (a < 5) continue;
    r[i] -= 0.01;
    auto [dx, dy] = step_of(a - 5);
    const int x = agents[i].cell.x + dx, y = agents[i].cell.y + dy;
    if (!inside(x, y)) continue;
    if (int f = food_at(x, y); f >= 0) {
      food[static_cast<std::size_t>(f)].hits_left -= 1;
      r[i] += food[static_cast<std::size_t>(f)].hits_left == 0 ? 0.5 : 0.1;
    } else if (int t = agent_at(x, y); t >= 0) {
      agents[static_cast<std::size_t>(t)].hp -= 2.0;
    }
  }
  for (std::size_t i : order)
    if (agents[i].hp <= 0) r[i] -= 1.0;
  return r;
}

GatherConfig tiny_gather() {
  GatherConfig c;
  c.width = 6;
  c.height = 6;
  c.n_agents = 2;
  c.n_food = 1;
  c.view_radius = 1;
  return c;
}

}  // namespace

TEST_CASE("coopnav: reset is deterministic and observation length is 20 for N=6, L=3") {
  CoopNavConfig cfg;
  auto a = coopnav_reset(cfg, 7);
  auto b = coopnav_reset(cfg, 7);
  CHECK(a.result.observations == b.result.observations);
  CHECK(a.result.observations.cols() == 20);
  CHECK(coopnav_obs_dim(cfg) == 20);
  for (const Vec2& v : a.state.velocities) CHECK((v.x == 0.0 && v.y == 0.0));
  for (const Vec2& p : a.state.positions) CHECK((std::abs(p.x) <= 1.0 && std::abs(p.y) <= 1.0));
  auto c = coopnav_reset(cfg, 8);
  CHECK_FALSE(c.result.observations == a.result.observations);
}

TEST_CASE("coopnav: single agent and landmark is a valid episode") {
  CoopNavConfig cfg;
  cfg.n_agents = 1;
  cfg.n_landmarks = 1;
  auto r = coopnav_reset(cfg, 1);
  CHECK(r.result.observations.cols() == 6);
  std::vector<Vec2> f{{0.3, -0.2}};
  for (int t = 0; t < 25; ++t) {
    auto s = coopnav_step(r.state, f);
    CHECK(s.done == (t == 24));
  }
  CHECK_THROWS_AS(coopnav_step(r.state, f), Error);
}

TEST_CASE("coopnav: observation layout") {
  CoopNavConfig cfg;
  cfg.n_agents = 3;
  cfg.n_landmarks = 2;
  CoopNavState s;
  s.config = cfg;
  s.positions = {{0.1, 0.2}, {-0.5, 0.4}, {0.9, -0.9}};
  s.velocities = {{0.01, 0.02}, {0.0, 0.0}, {-0.3, 0.3}};
  s.landmarks = {{0.0, 0.0}, {1.0, 1.0}};
  auto r = coopnav_observe(s);
  const std::vector<double> expect = {0.01, 0.02, 0.1, 0.2, -0.1, -0.2, 0.9, 0.8, -0.6, 0.2, 0.8, -1.1};
  auto row = r.observations.row_span(0);
  REQUIRE(row.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) CHECK(row[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("coopnav: reward examples") {
  CoopNavConfig cfg;
  std::vector<Vec2> lm{{0.5, 0.5}, {-0.5, 0.0}, {0.0, -0.7}};
  std::vector<Vec2> covered{{0.5, 0.5}, {-0.5, 0.0}, {0.0, -0.7}, {0.9, 0.9}, {-0.9, 0.9}, {0.9, -0.9}};
  CHECK(coopnav_team_reward(cfg, covered, lm) == 0.0);
  auto with_pair = covered;
  with_pair[4] = with_pair[3];
  CHECK(coopnav_team_reward(cfg, with_pair, lm) == doctest::Approx(-1.0));
}

TEST_CASE("coopnav: step rewards match the oracle and physics") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  CoopNavConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    auto r = coopnav_reset(cfg, 100 + trial);
    for (int t = 0; t < 25; ++t) {
      std::vector<Vec2> f(6);
      for (Vec2& v : f) v = {u(rng), u(rng)};
      auto prev = r.state;
      auto s = coopnav_step(r.state, f);
      for (std::size_t i = 0; i < 6; ++i) {
        const double fx = std::clamp(f[i].x, -1.0, 1.0);
        const double vx = 0.5 * prev.velocities[i].x + 0.1 * fx;
        CHECK(r.state.velocities[i].x == doctest::Approx(vx).epsilon(1e-12));
        CHECK(r.state.positions[i].x == doctest::Approx(std::clamp(prev.positions[i].x + 0.1 * vx, -1.0, 1.0)));
      }
      const double want = coopnav_reward_oracle(r.state.positions, r.state.landmarks, 0.05, 1.0);
      for (double rew : s.rewards) CHECK(rew == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("coopnav: reward is translation invariant") {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  CoopNavConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> a(6), l(3);
    for (Vec2& p : a) p = {u(rng), u(rng)};
    for (Vec2& p : l) p = {u(rng), u(rng)};
    if (trial % 7 == 0) a[1] = a[0];
    const Vec2 shift{u(rng) * 0.5, u(rng) * 0.5};
    auto a2 = a, l2 = l;
    for (Vec2& p : a2) p = {p.x + shift.x, p.y + shift.y};
    for (Vec2& p : l2) p = {p.x + shift.x, p.y + shift.y};
    CHECK(coopnav_team_reward(cfg, a, l) == doctest::Approx(coopnav_team_reward(cfg, a2, l2)).epsilon(1e-9));
  }
}

TEST_CASE("coopnav: errors and state round trip") {
  CoopNavEnv env(CoopNavConfig{});
  env.reset(5);
  CHECK_THROWS_AS(env.step(Matrix(5, 2)), Error);
  Matrix act(6, 2, 0.3);
  env.step(act);
  const std::string snap = env.save_state();
  auto a = env.step(act);
  CoopNavEnv other(CoopNavConfig{});
  other.load_state(snap);
  auto b = other.step(act);
  CHECK(a.observations == b.observations);
  CHECK(a.rewards == b.rewards);
}

TEST_CASE("gather: reset determinism, counters and errors") {
  GatherConfig cfg;
  auto a = gather_reset(cfg, 3);
  auto b = gather_reset(cfg, 3);
  CHECK(a.result.observations == b.result.observations);
  CHECK(a.state.agents.size() == 16);
  CHECK(a.state.food.size() == 40);
  CHECK(a.result.observations.cols() == 53);
  for (const Food& f : a.state.food) CHECK(f.hits_left == 5);

  GatherConfig bad = cfg;
  bad.n_agents = 0;
  CHECK_THROWS_AS(gather_reset(bad, 1), Error);
  bad = cfg;
  bad.width = 3;
  bad.height = 3;
  bad.n_agents = 5;
  bad.n_food = 5;
  CHECK_THROWS_AS(gather_reset(bad, 1), Error);

  GatherConfig one = tiny_gather();
  auto r = gather_reset(one, 1, GatherLayout{{{0, 0}, {5, 5}}, {{2, 3}}});
  REQUIRE(r.state.food.size() == 1);
  CHECK(r.state.food[0].cell == Cell{2, 3});
  CHECK(r.state.food[0].hits_left == 5);
}

TEST_CASE("gather: five attacks absorb food and the fifth pays the eat reward") {
  auto r = gather_reset(tiny_gather(), 1, GatherLayout{{{2, 2}, {5, 5}}, {{2, 3}}});
  auto& s = r.state;
  for (int k = 1; k <= 5; ++k) {
    auto out = gather_step(s, std::vector<int>{kAttackUp, kNoop});
    if (k < 5) {
      CHECK(out.rewards[0] == doctest::Approx(0.1 - 0.01));
      CHECK(s.food.size() == 1);
      CHECK(s.food[0].hits_left == 5 - k);
      CHECK_FALSE(out.done);
    } else {
      CHECK(out.rewards[0] == doctest::Approx(0.5 - 0.01));
      CHECK(s.food.empty());
      CHECK(s.absorbed == 1);
      CHECK(out.done);
    }
    CHECK(out.rewards[1] == 0.0);
  }
}

TEST_CASE("gather: agent at HP 2 dies from one hit") {
  GatherConfig cfg = tiny_gather();
  auto r = gather_reset(cfg, 1, GatherLayout{{{2, 2}, {3, 2}}, {{0, 5}}});
  auto& s = r.state;
  s.agents[1].hp = 2.0;
  auto out = gather_step(s, std::vector<int>{kAttackRight, kNoop});
  CHECK(s.agents[1].hp == 0.0);
  CHECK_FALSE(s.agents[1].alive);
  CHECK(out.rewards[1] == doctest::Approx(-1.0));
  CHECK(out.rewards[0] == doctest::Approx(-0.01));
  CHECK(out.alive[1] == 0);
  CHECK(s.deaths == 1);
  CHECK_FALSE(out.done);
  CHECK(out.alive_count() == 1);
  // Dead agent row is zero and it may no longer act.
  for (double v : out.observations.row_span(1)) CHECK(v == 0.0);
}

TEST_CASE("gather: hp regenerates up to the cap and movement is blocked") {
  GatherConfig cfg = tiny_gather();
  cfg.n_agents = 3;
  auto r = gather_reset(cfg, 1, GatherLayout{{{0, 0}, {1, 0}, {3, 3}}, {{3, 4}}});
  auto& s = r.state;
  s.agents[2].hp = 9.95;
  gather_step(s, std::vector<int>{kMoveRight, kMoveLeft, kMoveUp});
  CHECK(s.agents[0].cell == Cell{0, 0});
  CHECK(s.agents[1].cell == Cell{1, 0});
  CHECK(s.agents[2].cell == Cell{3, 3});
  CHECK(s.agents[2].hp == 10.0);
  gather_step(s, std::vector<int>{kMoveLeft, kMoveUp, kMoveDown});
  CHECK(s.agents[0].cell == Cell{0, 0});
  CHECK(s.agents[1].cell == Cell{1, 1});
  CHECK(s.agents[2].cell == Cell{3, 2});
}

TEST_CASE("gather: dead agents may not act") {
  auto r = gather_reset(tiny_gather(), 1, GatherLayout{{{2, 2}, {3, 2}}, {{0, 5}}});
  r.state.agents[1].alive = false;
  CHECK_THROWS_AS(gather_step(r.state, std::vector<int>{kNoop, kNoop}), Error);
  CHECK_NOTHROW(gather_step(r.state, std::vector<int>{kNoop, kNoAction}));
  CHECK_THROWS_AS(gather_step(r.state, std::vector<int>{kNoop}), Error);
}

TEST_CASE("gather: rewards match a rule-by-rule oracle on random play") {
  GatherConfig cfg;
  cfg.width = 8;
  cfg.height = 8;
  cfg.n_agents = 12;
  cfg.n_food = 10;
  Rng act_rng(42);
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = gather_reset(cfg, seed);
    auto& s = r.state;
    bool done = false;
    while (!done) {
      const auto actions = random_gather_actions(s, act_rng);
      const auto want = gather_reward_oracle(s, actions);
      auto out = gather_step(s, actions);
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(out.rewards[i] == doctest::Approx(want[i]).epsilon(1e-12));
      ++compared;
      done = out.done;
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("gather: conservation and monotone alive count") {
  GatherConfig cfg;
  cfg.width = 10;
  cfg.height = 10;
  cfg.n_agents = 20;
  cfg.n_food = 15;
  Rng act_rng(9);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto r = gather_reset(cfg, seed);
    auto& s = r.state;
    std::size_t alive = r.result.alive_count();
    std::vector<std::uint8_t> prev_alive = r.result.alive;
    bool done = false;
    while (!done) {
      auto out = gather_step(s, random_gather_actions(s, act_rng));
      std::size_t partial = 0;
      for (const Food& f : s.food) partial += static_cast<std::size_t>(5 - f.hits_left);
      CHECK(s.hits_landed == 5 * s.absorbed + partial);
      CHECK(out.alive_count() <= alive);
      for (std::size_t i = 0; i < prev_alive.size(); ++i) {
        if (!prev_alive[i]) {
          CHECK(out.alive[i] == 0);
          CHECK(out.rewards[i] == 0.0);
        }
      }
      CHECK(out.observations.cols() == gather_obs_dim(cfg));
      alive = out.alive_count();
      prev_alive = out.alive;
      done = out.done;
    }
    CHECK(s.food.size() + s.absorbed == cfg.n_food);
  }
}

TEST_CASE("gather: observation channels") {
  GatherConfig cfg = tiny_gather();
  auto r = gather_reset(cfg, 1, GatherLayout{{{0, 0}, {1, 0}}, {{0, 1}}});
  auto row = r.result.observations.row_span(0);
  // 3x3 window, row-major from dy=-1; cell (dx, dy) sits at index 2*((dy+1)*3 + (dx+1)).
  auto at = [&](int dx, int dy, int ch) { return row[static_cast<std::size_t>(2 * ((dy + 1) * 3 + (dx + 1)) + ch)]; };
  CHECK(at(0, -1, 1) == -1.0);
  CHECK(at(-1, 0, 1) == -1.0);
  CHECK(at(0, 0, 1) == 0.0);
  CHECK(at(1, 0, 1) == 1.0);
  CHECK(at(0, 1, 0) == 1.0);
  CHECK(row[18] == 1.0);
  CHECK(row[19] == 0.0);
  CHECK(row[20] == 0.0);
}

TEST_CASE("gather: determinism and snapshot round trip") {
  GatherConfig cfg;
  MiniGatherEnv a(cfg), b(cfg);
  a.reset(77);
  b.reset(77);
  Rng act_rng(1);
  std::uniform_int_distribution<int> pick(0, 8);
  for (int t = 0; t < 30; ++t) {
    Matrix act(cfg.n_agents, 1);
    for (std::size_t i = 0; i < cfg.n_agents; ++i) act(i, 0) = pick(act_rng);
    auto ra = a.step(act);
    auto rb = b.step(act);
    CHECK(ra.observations == rb.observations);
    CHECK(ra.rewards == rb.rewards);
  }
  const std::string snap = a.save_state();
  MiniGatherEnv c(cfg);
  c.load_state(snap);
  CHECK(c.save_state() == snap);
  Matrix act(cfg.n_agents, 1, 8.0);
  auto ra = a.step(act);
  auto rc = c.step(act);
  CHECK(ra.observations == rc.observations);
  CHECK(ra.rewards == rc.rewards);
}

TEST_CASE("trajectory writer emits one json object per line") {
  CoopNavEnv env(CoopNavConfig{});
  auto r = env.reset(1);
  std::ostringstream os;
  TrajectoryWriter w(os);
  Matrix act(6, 2, 0.1);
  w.write(0, r, act);
  w.write(1, env.step(act), act);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\"step\":1") != std::string::npos);
  CHECK(text.find("\"alive\":[1,1,1,1,1,1]") != std::string::npos);
}
