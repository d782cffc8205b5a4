// Command-line front end: train, eval, export, sweep, config.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "sea/harness/run.hpp"

namespace {

using namespace sea;
using namespace sea::harness;
using nlohmann::json;

struct ConfigFlags {
  std::string config_path;
  std::string env, algo, critic, out, dump_topology;
  std::optional<std::uint64_t> seed, steps;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool single_run) {
  cmd->add_option("--config", f.config_path, "Config file (key = value lines)");
  cmd->add_option("--env", f.env, "Environment: coopnav or gather");
  cmd->add_option("--algo", f.algo, "Algorithm: a2c, ppo or ddpg");
  cmd->add_option("--critic", f.critic, "Critic: plain, sea, sea-global or sea-local");
  cmd->add_option("--steps", f.steps, "Total environment steps");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--set", f.sets, "Extra override, key=value (repeatable)");
  if (single_run) {
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--dump-topology", f.dump_topology, "Write SEA topology at each evaluation to this JSON-lines file");
  }
}

// File values first, then explicit flags.
TrainRunConfig build_config(const ConfigFlags& f) {
  TrainRunConfig c = f.config_path.empty() ? TrainRunConfig{} : load_config(f.config_path);
  if (!f.env.empty()) set_config_value(c, "env", f.env);
  if (!f.algo.empty()) set_config_value(c, "algo", f.algo);
  if (!f.critic.empty()) set_config_value(c, "critic", f.critic);
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.dump_topology.empty()) c.dump_topology = f.dump_topology;
  if (f.seed) c.seed = *f.seed;
  if (f.steps) c.total_steps = *f.steps;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set: expected key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate_config(c);
  return c;
}

json summary_json(const EvalSummary& e) {
  json j{{"episodes", e.episodes},
         {"return_mean", e.return_mean},
         {"return_min", e.return_min},
         {"return_max", e.return_max},
         {"alive_end_mean", e.alive_end_mean}};
  if (e.absorbed || e.deaths) {
    j["absorbed"] = e.absorbed;
    j["deaths"] = e.deaths;
    j["ratio"] = e.ratio;
    j["ratio_zero_deaths"] = e.zero_deaths;
  }
  return j;
}

void print_record(const MetricRecord& r) {
  std::printf("step %llu  return %.4f [%.4f, %.4f]  policy %.4g  value %.4g  entropy %.4g\n",
              static_cast<unsigned long long>(r.step), r.return_mean, r.return_min, r.return_max, r.loss_policy,
              r.loss_value, r.entropy);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEA critic training and evaluation"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  bool resume = false;
  auto* train = app.add_subcommand("train", "Train one run");
  add_config_flags(train, train_flags, true);
  train->add_flag("--resume", resume, "Continue from <out>/checkpoint.ckpt");

  std::string ckpt;
  std::size_t episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with the greedy policy");
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--episodes", episodes, "Number of episodes");
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  std::vector<std::string> runs;
  std::string export_out;
  bool interpolate = false;
  auto* exp = app.add_subcommand("export", "Aggregate metric streams across runs");
  exp->add_option("--runs", runs, "Run directories, or directories of runs")->required();
  exp->add_option("--out", export_out, "Output directory")->required();
  exp->add_flag("--interpolate", interpolate, "Resample runs onto the first run's step grid");

  ConfigFlags sweep_flags;
  std::string seeds = "0-4";
  auto* sweep = app.add_subcommand("sweep", "Train one run per seed on parallel workers");
  add_config_flags(sweep, sweep_flags, false);
  sweep->add_option("--seeds", seeds, "Seeds, e.g. 0-4 or 1,3,5");

  ConfigFlags def_flags;
  auto* defaults = app.add_subcommand("config", "Print the effective configuration");
  add_config_flags(defaults, def_flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"command", "parse"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*train) {
      const TrainRunConfig c = build_config(train_flags);
      RunOptions opt;
      opt.resume = resume;
      opt.on_record = print_record;
      const TrainResult r = run_training(c, opt);
      std::cout << json{{"out", c.out_dir}, {"steps", r.steps}, {"final", summary_json(r.final_eval)}}.dump() << "\n";
    } else if (*eval) {
      std::cout << summary_json(run_eval(ckpt, episodes, eval_seed)).dump(2) << "\n";
    } else if (*exp) {
      std::vector<std::filesystem::path> paths(runs.begin(), runs.end());
      const auto used = export_metrics(paths, export_out, {.interpolate = interpolate});
      std::cout << json{{"runs", used.size()}, {"combined", (std::filesystem::path(export_out) / "combined.csv").string()}}
                       .dump()
                << "\n";
    } else if (*sweep) {
      const TrainRunConfig c = build_config(sweep_flags);
      const auto results = run_sweep(c, parse_seed_list(seeds));
      json out = json::array();
      for (const auto& r : results) out.push_back({{"checkpoint", r.checkpoint.string()}, {"final", summary_json(r.final_eval)}});
      std::cout << out.dump(2) << "\n";
    } else if (*defaults) {
      std::cout << serialize_config(build_config(def_flags));
    }
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"command", command}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
