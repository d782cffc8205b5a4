#include "sea/harness/run.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include "sea/spatial/sea.hpp"

namespace fs = std::filesystem;

namespace sea::harness {

using ad::Checkpoint;
using ad::Matrix;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.ckpt";

enum Stream : std::uint64_t { kInitStream = 1, kTrainStream = 2, kEpisodeStream = 3, kEvalStream = 4 };

rl::Learner make_learner(const TrainRunConfig& config, const env::Environment& env) {
  Rng init(derive_seed(config.seed, kInitStream));
  return rl::Learner::create(config.algo, config.net, env.obs_dim(), env.action_spec(), init);
}

// ---- replay buffer <-> tensors ------------------------------------------------

void put_frame(std::vector<Matrix*> out, std::size_t base, const rl::Frame& f) {
  for (std::size_t i = 0; i < f.n_agents(); ++i) {
    std::copy(f.obs.row_span(i).begin(), f.obs.row_span(i).end(), out[0]->row_span(base + i).begin());
    (*out[1])(base + i, 0) = f.coords[i].x;
    (*out[1])(base + i, 1) = f.coords[i].y;
    (*out[2])(base + i, 0) = f.alive[i];
  }
}

rl::Frame get_frame(const Matrix& obs, const Matrix& coords, const Matrix& alive, std::size_t base, std::size_t n) {
  rl::Frame f;
  f.obs = Matrix(n, obs.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(obs.row_span(base + i).begin(), obs.row_span(base + i).end(), f.obs.row_span(i).begin());
    f.coords.push_back({coords(base + i, 0), coords(base + i, 1)});
    f.alive.push_back(static_cast<std::uint8_t>(alive(base + i, 0)));
  }
  return f;
}

void store_replay(Checkpoint& ck, const rl::ReplayBuffer& buf, std::size_t n, std::size_t obs_dim,
                  std::size_t act_dim) {
  const std::size_t size = buf.size(), rows = size * n;
  Matrix s_obs(rows, obs_dim), s_xy(rows, 2), s_alive(rows, 1), acts(rows, act_dim), rew(rows, 1);
  Matrix n_obs(rows, obs_dim), n_xy(rows, 2), n_alive(rows, 1), done(size, 1);
  for (std::size_t k = 0; k < size; ++k) {
    const rl::Transition& t = buf.at(k);
    put_frame({&s_obs, &s_xy, &s_alive}, k * n, t.state);
    put_frame({&n_obs, &n_xy, &n_alive}, k * n, t.next);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(t.actions.row_span(i).begin(), t.actions.row_span(i).end(), acts.row_span(k * n + i).begin());
      rew(k * n + i, 0) = t.rewards[i];
    }
    done(k, 0) = t.done ? 1.0 : 0.0;
  }
  ck.meta["replay.size"] = std::to_string(size);
  ck.meta["replay.cursor"] = std::to_string(buf.cursor());
  ck.add("replay/state_obs", std::move(s_obs));
  ck.add("replay/state_xy", std::move(s_xy));
  ck.add("replay/state_alive", std::move(s_alive));
  ck.add("replay/actions", std::move(acts));
  ck.add("replay/rewards", std::move(rew));
  ck.add("replay/next_obs", std::move(n_obs));
  ck.add("replay/next_xy", std::move(n_xy));
  ck.add("replay/next_alive", std::move(n_alive));
  ck.add("replay/done", std::move(done));
}

void load_replay(const Checkpoint& ck, rl::ReplayBuffer& buf, std::size_t n) {
  const std::size_t size = std::stoull(ck.meta_value("replay.size"));
  const std::size_t cursor = std::stoull(ck.meta_value("replay.cursor"));
  const Matrix& acts = ck.tensor("replay/actions");
  const Matrix& rew = ck.tensor("replay/rewards");
  const Matrix& done = ck.tensor("replay/done");
  if (acts.rows() != size * n || done.rows() != size) throw Error("checkpoint: replay tensors have the wrong size");
  std::vector<rl::Transition> slots(size);
  for (std::size_t k = 0; k < size; ++k) {
    rl::Transition& t = slots[k];
    t.state = get_frame(ck.tensor("replay/state_obs"), ck.tensor("replay/state_xy"), ck.tensor("replay/state_alive"),
                        k * n, n);
    t.next = get_frame(ck.tensor("replay/next_obs"), ck.tensor("replay/next_xy"), ck.tensor("replay/next_alive"),
                       k * n, n);
    t.actions = Matrix(n, acts.cols());
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(acts.row_span(k * n + i).begin(), acts.row_span(k * n + i).end(), t.actions.row_span(i).begin());
      t.rewards.push_back(rew(k * n + i, 0));
    }
    t.done = done(k, 0) != 0.0;
  }
  buf.restore(std::move(slots), cursor);
}

// ---- training state ---------------------------------------------------------------

struct Progress {
  std::uint64_t steps = 0;
  std::uint64_t next_eval = 0;
  std::uint64_t evals = 0;
  double seconds = 0.0;
};

struct Session {
  TrainRunConfig config;
  std::unique_ptr<env::Environment> env;
  rl::Learner learner;
  rl::ReplayBuffer replay;
  rl::RolloutCursor cursor;
  Rng rng;
  Progress progress;
};

void store_networks(Checkpoint& ck, rl::Learner& L) {
  ad::store_parameters(ck, "actor/", L.nets.actor->parameters());
  ad::store_parameters(ck, "critic/", L.nets.critic->parameters());
  if (L.nets.target_actor) {
    ad::store_parameters(ck, "target_actor/", L.nets.target_actor->parameters());
    ad::store_parameters(ck, "target_critic/", L.nets.target_critic->parameters());
  }
  ad::store_adam(ck, "actor_opt/", L.actor_opt);
  ad::store_adam(ck, "critic_opt/", L.critic_opt);
}

void load_networks(const Checkpoint& ck, rl::Learner& L) {
  ad::load_parameters(ck, "actor/", L.nets.actor->parameters());
  ad::load_parameters(ck, "critic/", L.nets.critic->parameters());
  if (L.nets.target_actor) {
    ad::load_parameters(ck, "target_actor/", L.nets.target_actor->parameters());
    ad::load_parameters(ck, "target_critic/", L.nets.target_critic->parameters());
  }
  ad::load_adam(ck, "actor_opt/", L.actor_opt);
  ad::load_adam(ck, "critic_opt/", L.critic_opt);
}

void save_session(const Session& s, const fs::path& path) {
  Checkpoint ck;
  ck.meta["config"] = serialize_config(s.config);
  ck.meta["steps"] = std::to_string(s.progress.steps);
  ck.meta["next_eval"] = std::to_string(s.progress.next_eval);
  ck.meta["evals"] = std::to_string(s.progress.evals);
  ck.meta["seconds"] = std::to_string(s.progress.seconds);
  ck.meta["rng"] = rng_state(s.rng);
  ck.meta["cursor.episodes"] = std::to_string(s.cursor.episodes);
  ck.meta["cursor.started"] = s.cursor.started ? "1" : "0";
  ck.meta["env"] = s.cursor.started ? s.env->save_state() : "";
  store_networks(ck, const_cast<rl::Learner&>(s.learner));
  if (s.config.algo.algorithm == rl::Algorithm::ddpg)
    store_replay(ck, s.replay, s.env->n_agents(), s.env->obs_dim(), s.learner.nets.actor->action_features());
  const fs::path tmp = path.string() + ".tmp";
  ad::save_checkpoint(tmp, ck);
  fs::rename(tmp, path);
}

// Keys that may differ between a run and the checkpoint it resumes from.
bool ignorable_on_resume(const std::string& key) { return key == "out_dir" || key == "dump_topology"; }

void load_session(Session& s, const fs::path& path) {
  const Checkpoint ck = ad::load_checkpoint(path);
  const TrainRunConfig saved = parse_config(ck.meta_value("config"));
  for (const auto& key : config_keys()) {
    if (ignorable_on_resume(key)) continue;
    if (get_config_value(saved, key) != get_config_value(s.config, key))
      throw Error("resume: config field '" + key + "' differs from the checkpoint (" + get_config_value(saved, key) +
                  " vs " + get_config_value(s.config, key) + ")");
  }
  s.progress.steps = std::stoull(ck.meta_value("steps"));
  s.progress.next_eval = std::stoull(ck.meta_value("next_eval"));
  s.progress.evals = std::stoull(ck.meta_value("evals"));
  s.progress.seconds = std::stod(ck.meta_value("seconds"));
  set_rng_state(s.rng, ck.meta_value("rng"));
  s.cursor.episodes = std::stoull(ck.meta_value("cursor.episodes"));
  s.cursor.started = ck.meta_value("cursor.started") == "1";
  if (s.cursor.started) {
    s.env->load_state(ck.meta_value("env"));
    s.cursor.current = s.env->observe();
  }
  load_networks(ck, s.learner);
  if (s.config.algo.algorithm == rl::Algorithm::ddpg) load_replay(ck, s.replay, s.env->n_agents());
}

// Keeps the records up to `steps` and rewrites the file with exactly those.
std::vector<MetricRecord> truncate_metrics(const fs::path& path, std::uint64_t steps) {
  std::vector<MetricRecord> kept;
  if (fs::exists(path))
    for (const auto& r : read_metrics(path))
      if (r.step <= steps) kept.push_back(r);
  std::ofstream out(path, std::ios::trunc);
  out << csv_header() << "\n";
  for (const auto& r : kept) out << csv_row(r) << "\n";
  return kept;
}

struct Accumulator {
  double policy = 0.0, value = 0.0, entropy = 0.0;
  std::size_t count = 0;
  void add(const rl::UpdateStats& s) {
    policy += s.policy_loss;
    value += s.value_loss;
    entropy += s.entropy;
    ++count;
  }
};

}  // namespace

GatherRatio gather_ratio(std::size_t absorbed, std::size_t deaths) {
  if (deaths == 0) return {static_cast<double>(absorbed), true};
  return {static_cast<double>(absorbed) / static_cast<double>(deaths), false};
}

EvalSummary evaluate(rl::Learner& learner, const TrainRunConfig& config, std::size_t episodes, std::uint64_t seed,
                     std::string* topology_out) {
  if (episodes == 0) throw Error("evaluate: episodes must be positive");
  auto env = make_environment(config);
  Rng unused(seed);
  EvalSummary out;
  out.episodes = episodes;
  double total = 0.0, alive_total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    env::StepResult r = env->reset(derive_seed(seed, e));
    if (e == 0 && topology_out) *topology_out = spatial::topology_json(learner.nets.critic->topology(rl::frame_from(r)));
    std::vector<double> returns(env->n_agents(), 0.0);
    while (!r.done) {
      const rl::Frame f = rl::frame_from(r);
      const rl::ActionChoice c = rl::select_actions(*learner.nets.actor, f, rl::ActMode::greedy, unused);
      r = env->step(c.env_actions);
      for (std::size_t i = 0; i < returns.size(); ++i) returns[i] += r.rewards[i];
    }
    double mean = 0.0;
    for (double v : returns) mean += v;
    mean /= static_cast<double>(returns.size());
    out.return_min = e == 0 ? mean : std::min(out.return_min, mean);
    out.return_max = e == 0 ? mean : std::max(out.return_max, mean);
    total += mean;
    alive_total += static_cast<double>(r.alive_count());
    const env::EpisodeCounters k = env->counters();
    out.absorbed += k.absorbed;
    out.deaths += k.deaths;
  }
  out.return_mean = total / static_cast<double>(episodes);
  out.alive_end_mean = alive_total / static_cast<double>(episodes);
  const GatherRatio g = gather_ratio(out.absorbed, out.deaths);
  out.ratio = g.value;
  out.zero_deaths = g.zero_deaths;
  return out;
}

TrainResult run_training(const TrainRunConfig& config, const RunOptions& options) {
  validate_config(config);
  const fs::path dir = config.out_dir;
  fs::create_directories(dir);
  const fs::path metrics_path = dir / "metrics.csv";
  const fs::path ckpt_path = dir / kCheckpointFile;

  Session s{config, make_environment(config), {}, rl::ReplayBuffer(config.algo.buffer_capacity), {},
            Rng(derive_seed(config.seed, kTrainStream)), {}};
  s.learner = make_learner(config, *s.env);
  s.cursor.base_seed = derive_seed(config.seed, kEpisodeStream);
  const std::uint64_t eval_seed = derive_seed(config.seed, kEvalStream);

  TrainResult result;
  bool fresh = true;
  if (options.resume) {
    if (!fs::exists(ckpt_path)) throw Error("resume: no checkpoint at '" + ckpt_path.string() + "'");
    load_session(s, ckpt_path);
    result.records = truncate_metrics(metrics_path, s.progress.steps);
    fresh = false;
  } else {
    std::ofstream(dir / "config.txt") << serialize_config(config);
    std::ofstream(metrics_path, std::ios::trunc) << csv_header() << "\n";
  }

  std::ofstream metrics(metrics_path, std::ios::app);
  std::ofstream topo;
  if (!config.dump_topology.empty()) topo.open(config.dump_topology, fresh ? std::ios::trunc : std::ios::app);

  const auto t0 = std::chrono::steady_clock::now();
  const double seconds_base = s.progress.seconds;
  auto elapsed = [&] {
    if (!config.wall_clock) return 0.0;
    return seconds_base + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Accumulator acc;
  auto record = [&] {
    std::string topology;
    const EvalSummary ev = evaluate(s.learner, config, config.eval_episodes, eval_seed,
                                    topo.is_open() ? &topology : nullptr);
    if (topo.is_open()) topo << "{\"step\":" << s.progress.steps << ",\"topology\":" << topology << "}\n" << std::flush;
    MetricRecord r;
    r.step = s.progress.steps;
    r.seconds = elapsed();
    r.return_mean = ev.return_mean;
    r.return_min = ev.return_min;
    r.return_max = ev.return_max;
    if (acc.count > 0) {
      r.loss_policy = acc.policy / static_cast<double>(acc.count);
      r.loss_value = acc.value / static_cast<double>(acc.count);
      r.entropy = acc.entropy / static_cast<double>(acc.count);
    }
    if (config.env == EnvKind::gather) {
      r.extra1 = ev.alive_end_mean;
      r.extra2 = static_cast<double>(ev.absorbed) / static_cast<double>(ev.episodes);
    }
    acc = {};
    metrics << csv_row(r) << "\n" << std::flush;
    result.records.push_back(r);
    result.final_eval = ev;
    if (options.on_record) options.on_record(r);
    ++s.progress.evals;
    s.progress.next_eval = (s.progress.steps / config.eval_interval + 1) * config.eval_interval;
  };
  auto checkpoint = [&] {
    s.progress.seconds = elapsed();
    save_session(s, ckpt_path);
  };

  if (fresh) {
    record();
    if (config.checkpoint_every > 0) checkpoint();
  }

  const std::uint64_t total = config.total_steps;
  const std::uint64_t stop = options.stop_at ? std::min(*options.stop_at, total) : total;
  const bool off_policy = config.algo.algorithm == rl::Algorithm::ddpg;
  while (s.progress.steps < stop) {
    const std::uint64_t remaining = total - s.progress.steps;
    if (off_policy) {
      const std::size_t chunk = static_cast<std::size_t>(std::min<std::uint64_t>(config.algo.update_every, remaining));
      const double noise = rl::exploration_noise(config.algo, s.progress.steps);
      rl::collect_transitions(*s.env, s.learner, s.cursor, chunk, noise, s.rng, s.replay);
      s.progress.steps += chunk;
      if (s.progress.steps >= config.algo.warmup_steps && s.replay.size() >= config.algo.batch_size)
        for (std::size_t u = 0; u < config.algo.updates_per_round; ++u)
          acc.add(rl::ddpg_update(s.replay.sample(config.algo.batch_size, s.rng), s.learner));
    } else {
      const std::size_t chunk = static_cast<std::size_t>(std::min<std::uint64_t>(config.algo.rollout_length, remaining));
      rl::RolloutBatch batch = rl::collect_rollout(*s.env, s.learner, s.cursor, chunk, s.rng);
      s.progress.steps += chunk;
      if (config.algo.algorithm == rl::Algorithm::a2c) {
        acc.add(rl::a2c_update(batch, s.learner));
      } else {
        const std::size_t mb = s.learner.algo.ppo_minibatches;
        s.learner.algo.ppo_minibatches = std::min(mb, chunk);
        acc.add(rl::ppo_update(batch, s.learner, s.rng));
        s.learner.algo.ppo_minibatches = mb;
      }
    }
    if (s.progress.steps >= s.progress.next_eval || s.progress.steps == total) {
      record();
      const bool periodic = config.checkpoint_every > 0 && s.progress.evals % config.checkpoint_every == 0;
      if (periodic || s.progress.steps == total || s.progress.steps >= stop) checkpoint();
    }
  }
  if (s.progress.steps >= stop && (result.records.empty() || result.records.back().step != s.progress.steps))
    throw Error("run: stop_at must fall on an evaluation boundary");
  if (!fs::exists(ckpt_path)) checkpoint();
  result.checkpoint = ckpt_path;
  result.steps = s.progress.steps;
  return result;
}

EvalSummary run_eval(const fs::path& checkpoint, std::size_t episodes, std::uint64_t seed,
                     const TrainRunConfig* env_override) {
  const Checkpoint ck = ad::load_checkpoint(checkpoint);
  TrainRunConfig config = parse_config(ck.meta_value("config"));
  if (env_override) {
    config.env = env_override->env;
    config.coopnav = env_override->coopnav;
    config.gather = env_override->gather;
  }
  auto env = make_environment(config);
  rl::Learner learner = make_learner(config, *env);
  try {
    ad::load_parameters(ck, "actor/", learner.nets.actor->parameters());
  } catch (const Error& e) {
    throw Error(std::string("eval: checkpoint does not fit the environment: ") + e.what());
  }
  return evaluate(learner, config, episodes, seed);
}

std::vector<TrainResult> run_many(const std::vector<TrainRunConfig>& configs) {
  std::set<std::string> dirs;
  for (const auto& c : configs)
    if (!dirs.insert(fs::weakly_canonical(c.out_dir).string()).second)
      throw Error("sweep: two runs share the output directory '" + c.out_dir + "'");
  std::vector<TrainResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const int n = static_cast<int>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      results[i] = run_training(configs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<TrainResult> run_sweep(const TrainRunConfig& base, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error("sweep: no seeds given");
  std::vector<TrainRunConfig> configs;
  for (std::uint64_t seed : seeds) {
    TrainRunConfig c = base;
    c.seed = seed;
    c.out_dir = (fs::path(base.out_dir) / ("seed_" + std::to_string(seed))).string();
    if (!c.dump_topology.empty()) c.dump_topology = (fs::path(c.out_dir) / "topology.jsonl").string();
    configs.push_back(c);
  }
  return run_many(configs);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  auto number = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw Error("seeds: '" + s + "' is not a non-negative integer");
    return std::stoull(s);
  };
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const std::uint64_t a = number(part.substr(0, dash)), b = number(part.substr(dash + 1));
    if (b < a) throw Error("seeds: empty range '" + part + "'");
    for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
  }
  if (out.empty()) throw Error("seeds: no seeds in '" + text + "'");
  return out;
}

}  // namespace sea::harness
