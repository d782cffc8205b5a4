#include "sea/harness/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace sea::harness {

std::string to_string(EnvKind k) { return k == EnvKind::coopnav ? "coopnav" : "gather"; }

EnvKind env_kind_from_string(const std::string& s) {
  if (s == "coopnav") return EnvKind::coopnav;
  if (s == "gather") return EnvKind::gather;
  throw Error("env: unknown environment '" + s + "' (expected coopnav or gather)");
}

namespace {

struct Field {
  std::string key;
  std::function<std::string(TrainRunConfig&)> get;
  std::function<void(TrainRunConfig&, const std::string&)> set;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw Error("expected a number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error("expected a number, got '" + s + "'");
  return v;
}

template <typename U>
U parse_unsigned(const std::string& s) {
  U v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("expected a non-negative integer, got '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error("expected true or false, got '" + s + "'");
}

template <typename T, typename Ref>
Field field(std::string key, Ref ref) {
  Field f;
  f.key = std::move(key);
  f.get = [ref](TrainRunConfig& c) -> std::string {
    const T& v = ref(c);
    if constexpr (std::is_same_v<T, double>) return format_double(v);
    else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
    else if constexpr (std::is_same_v<T, std::string>) return v;
    else return std::to_string(v);
  };
  f.set = [ref](TrainRunConfig& c, const std::string& s) {
    T& v = ref(c);
    if constexpr (std::is_same_v<T, double>) v = parse_double(s);
    else if constexpr (std::is_same_v<T, bool>) v = parse_bool(s);
    else if constexpr (std::is_same_v<T, std::string>) v = s;
    else if constexpr (std::is_same_v<T, int>) v = parse_int(s);
    else v = parse_unsigned<T>(s);
  };
  return f;
}

template <typename E, typename Ref, typename ToS, typename FromS>
Field enum_field(std::string key, Ref ref, ToS to_s, FromS from_s) {
  Field f;
  f.key = std::move(key);
  f.get = [ref, to_s](TrainRunConfig& c) { return to_s(ref(c)); };
  f.set = [ref, from_s](TrainRunConfig& c, const std::string& s) { ref(c) = from_s(s); };
  return f;
}

#define SEA_FIELD(T, key, expr) field<T>(key, [](TrainRunConfig& c) -> T& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back(enum_field<EnvKind>(
        "env", [](TrainRunConfig& c) -> EnvKind& { return c.env; }, [](EnvKind k) { return to_string(k); },
        env_kind_from_string));
    t.push_back(enum_field<rl::Algorithm>(
        "algo", [](TrainRunConfig& c) -> rl::Algorithm& { return c.algo.algorithm; },
        [](rl::Algorithm a) { return rl::to_string(a); }, rl::algorithm_from_string));
    t.push_back(enum_field<rl::CriticKind>(
        "critic", [](TrainRunConfig& c) -> rl::CriticKind& { return c.net.critic; },
        [](rl::CriticKind k) { return rl::to_string(k); }, rl::critic_kind_from_string));
    t.push_back(SEA_FIELD(std::uint64_t, "seed", c.seed));
    t.push_back(SEA_FIELD(std::uint64_t, "total_steps", c.total_steps));
    t.push_back(SEA_FIELD(std::uint64_t, "eval_interval", c.eval_interval));
    t.push_back(SEA_FIELD(std::size_t, "eval_episodes", c.eval_episodes));
    t.push_back(SEA_FIELD(std::size_t, "checkpoint_every", c.checkpoint_every));
    t.push_back(SEA_FIELD(bool, "wall_clock", c.wall_clock));
    t.push_back(SEA_FIELD(std::string, "dump_topology", c.dump_topology));
    t.push_back(SEA_FIELD(std::string, "out_dir", c.out_dir));

    t.push_back(SEA_FIELD(std::size_t, "coopnav.n_agents", c.coopnav.n_agents));
    t.push_back(SEA_FIELD(std::size_t, "coopnav.n_landmarks", c.coopnav.n_landmarks));
    t.push_back(SEA_FIELD(double, "coopnav.arena", c.coopnav.arena));
    t.push_back(SEA_FIELD(double, "coopnav.dt", c.coopnav.dt));
    t.push_back(SEA_FIELD(double, "coopnav.damping", c.coopnav.damping));
    t.push_back(SEA_FIELD(double, "coopnav.agent_radius", c.coopnav.agent_radius));
    t.push_back(SEA_FIELD(double, "coopnav.collision_penalty", c.coopnav.collision_penalty));
    t.push_back(SEA_FIELD(std::size_t, "coopnav.max_steps", c.coopnav.max_steps));

    t.push_back(SEA_FIELD(int, "gather.width", c.gather.width));
    t.push_back(SEA_FIELD(int, "gather.height", c.gather.height));
    t.push_back(SEA_FIELD(std::size_t, "gather.n_agents", c.gather.n_agents));
    t.push_back(SEA_FIELD(std::size_t, "gather.n_food", c.gather.n_food));
    t.push_back(SEA_FIELD(std::size_t, "gather.max_steps", c.gather.max_steps));
    t.push_back(SEA_FIELD(int, "gather.view_radius", c.gather.view_radius));
    t.push_back(SEA_FIELD(int, "gather.food_hits", c.gather.food_hits));
    t.push_back(SEA_FIELD(double, "gather.hp_max", c.gather.hp_max));
    t.push_back(SEA_FIELD(double, "gather.hp_regen", c.gather.hp_regen));
    t.push_back(SEA_FIELD(double, "gather.damage", c.gather.damage));
    t.push_back(SEA_FIELD(double, "gather.eat_reward", c.gather.eat_reward));
    t.push_back(SEA_FIELD(double, "gather.hit_reward", c.gather.hit_reward));
    t.push_back(SEA_FIELD(double, "gather.death_penalty", c.gather.death_penalty));
    t.push_back(SEA_FIELD(double, "gather.attack_cost", c.gather.attack_cost));

    t.push_back(SEA_FIELD(double, "algo.gamma", c.algo.gamma));
    t.push_back(SEA_FIELD(double, "algo.actor_lr", c.algo.actor_lr));
    t.push_back(SEA_FIELD(double, "algo.critic_lr", c.algo.critic_lr));
    t.push_back(SEA_FIELD(double, "algo.max_grad_norm", c.algo.max_grad_norm));
    t.push_back(SEA_FIELD(std::size_t, "algo.rollout_length", c.algo.rollout_length));
    t.push_back(SEA_FIELD(double, "algo.entropy_coef", c.algo.entropy_coef));
    t.push_back(SEA_FIELD(double, "algo.value_coef", c.algo.value_coef));
    t.push_back(SEA_FIELD(double, "algo.gae_lambda", c.algo.gae_lambda));
    t.push_back(SEA_FIELD(double, "algo.clip_epsilon", c.algo.clip_epsilon));
    t.push_back(SEA_FIELD(std::size_t, "algo.ppo_epochs", c.algo.ppo_epochs));
    t.push_back(SEA_FIELD(std::size_t, "algo.ppo_minibatches", c.algo.ppo_minibatches));
    t.push_back(SEA_FIELD(std::size_t, "algo.buffer_capacity", c.algo.buffer_capacity));
    t.push_back(SEA_FIELD(std::size_t, "algo.batch_size", c.algo.batch_size));
    t.push_back(SEA_FIELD(std::size_t, "algo.warmup_steps", c.algo.warmup_steps));
    t.push_back(SEA_FIELD(std::size_t, "algo.update_every", c.algo.update_every));
    t.push_back(SEA_FIELD(std::size_t, "algo.updates_per_round", c.algo.updates_per_round));
    t.push_back(SEA_FIELD(double, "algo.tau", c.algo.tau));
    t.push_back(SEA_FIELD(double, "algo.noise_start", c.algo.noise_start));
    t.push_back(SEA_FIELD(double, "algo.noise_end", c.algo.noise_end));
    t.push_back(SEA_FIELD(std::size_t, "algo.noise_decay_steps", c.algo.noise_decay_steps));

    t.push_back(SEA_FIELD(std::size_t, "net.actor_hidden", c.net.actor_hidden));
    t.push_back(SEA_FIELD(std::size_t, "net.actor_depth", c.net.actor_depth));
    t.push_back(SEA_FIELD(std::size_t, "net.critic_hidden", c.net.critic_hidden));
    t.push_back(SEA_FIELD(std::size_t, "net.critic_depth", c.net.critic_depth));
    t.push_back(SEA_FIELD(std::size_t, "net.sea_level1_width", c.net.sea_level1_width));
    t.push_back(SEA_FIELD(std::size_t, "net.sea_level2_width", c.net.sea_level2_width));
    t.push_back(SEA_FIELD(std::size_t, "net.sea_depth", c.net.sea_depth));
    t.push_back(SEA_FIELD(std::size_t, "net.sea_cluster_size", c.net.sea_cluster_size));
    t.push_back(SEA_FIELD(std::size_t, "net.sea_interp_neighbors", c.net.sea_interp_neighbors));
    t.push_back(SEA_FIELD(double, "net.sea_distance_power", c.net.sea_distance_power));
    t.push_back(SEA_FIELD(double, "net.init_log_std", c.net.init_log_std));
    return t;
  }();
  return table;
}

#undef SEA_FIELD

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw Error("config: unknown key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool operator==(const TrainRunConfig& a, const TrainRunConfig& b) { return serialize_config(a) == serialize_config(b); }

std::string serialize_config(const TrainRunConfig& config) {
  auto& c = const_cast<TrainRunConfig&>(config);
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

void set_config_value(TrainRunConfig& config, const std::string& key, const std::string& value) {
  const Field& f = find_field(key);
  try {
    f.set(config, value);
  } catch (const Error& e) {
    throw Error("config: " + key + ": " + e.what());
  }
}

std::string get_config_value(const TrainRunConfig& config, const std::string& key) {
  return find_field(key).get(const_cast<TrainRunConfig&>(config));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

TrainRunConfig parse_config(const std::string& text, TrainRunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config: line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (line " + std::to_string(number) + ")");
    }
  }
  return base;
}

TrainRunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const TrainRunConfig& c) {
  auto need = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw Error("config: " + key + " " + what);
  };
  need(c.eval_interval > 0, "eval_interval", "must be positive");
  need(c.eval_episodes > 0, "eval_episodes", "must be positive");
  need(!c.out_dir.empty(), "out_dir", "must not be empty");
  if (c.env == EnvKind::coopnav) {
    need(c.coopnav.n_agents > 0, "coopnav.n_agents", "must be positive");
    need(c.coopnav.n_landmarks > 0, "coopnav.n_landmarks", "must be positive");
    need(c.coopnav.max_steps > 0, "coopnav.max_steps", "must be positive");
    need(c.coopnav.arena > 0, "coopnav.arena", "must be positive");
    need(c.coopnav.dt > 0, "coopnav.dt", "must be positive");
  } else {
    need(c.gather.width > 0, "gather.width", "must be positive");
    need(c.gather.height > 0, "gather.height", "must be positive");
    need(c.gather.n_agents > 0, "gather.n_agents", "must be positive");
    need(c.gather.n_agents + c.gather.n_food <= std::size_t(c.gather.width) * std::size_t(c.gather.height),
         "gather.n_food", "leaves no room on the grid");
    need(c.gather.max_steps > 0, "gather.max_steps", "must be positive");
    need(c.gather.view_radius >= 0, "gather.view_radius", "must be non-negative");
    need(c.gather.food_hits > 0, "gather.food_hits", "must be positive");
    need(c.gather.hp_max > 0, "gather.hp_max", "must be positive");
  }
  const auto& a = c.algo;
  need(a.gamma >= 0 && a.gamma <= 1, "algo.gamma", "must lie in [0, 1]");
  need(a.actor_lr > 0, "algo.actor_lr", "must be positive");
  need(a.critic_lr > 0, "algo.critic_lr", "must be positive");
  need(a.max_grad_norm >= 0, "algo.max_grad_norm", "must be non-negative");
  need(a.rollout_length > 0, "algo.rollout_length", "must be positive");
  need(a.gae_lambda >= 0 && a.gae_lambda <= 1, "algo.gae_lambda", "must lie in [0, 1]");
  need(a.clip_epsilon > 0, "algo.clip_epsilon", "must be positive");
  need(a.ppo_epochs > 0, "algo.ppo_epochs", "must be positive");
  need(a.ppo_minibatches > 0 && a.ppo_minibatches <= a.rollout_length, "algo.ppo_minibatches",
       "must lie in [1, rollout_length]");
  need(a.buffer_capacity > 0, "algo.buffer_capacity", "must be positive");
  need(a.batch_size > 0, "algo.batch_size", "must be positive");
  need(a.update_every > 0, "algo.update_every", "must be positive");
  need(a.tau > 0 && a.tau <= 1, "algo.tau", "must lie in (0, 1]");
  need(a.noise_start >= 0 && a.noise_end >= 0, "algo.noise_start", "and noise_end must be non-negative");
  const auto& n = c.net;
  need(n.actor_hidden > 0 && n.actor_depth > 0, "net.actor_hidden", "and actor_depth must be positive");
  need(n.critic_hidden > 0 && n.critic_depth > 0, "net.critic_hidden", "and critic_depth must be positive");
  need(n.sea_level1_width > 0 && n.sea_level2_width > 0 && n.sea_depth > 0, "net.sea_level1_width",
       "level widths and sea_depth must be positive");
  need(n.sea_interp_neighbors > 0, "net.sea_interp_neighbors", "must be positive");
  need(n.sea_distance_power > 0, "net.sea_distance_power", "must be positive");
  need(c.dump_topology.empty() || rl::uses_sea(n.critic), "dump_topology", "needs a SEA critic");
}

std::unique_ptr<env::Environment> make_environment(const TrainRunConfig& config) {
  if (config.env == EnvKind::coopnav) return std::make_unique<env::CoopNavEnv>(config.coopnav);
  return std::make_unique<env::MiniGatherEnv>(config.gather);
}

}  // namespace sea::harness
