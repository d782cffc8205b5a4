#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "sea/harness/run.hpp"
#include "support.hpp"

using namespace sea;
using namespace sea::harness;
using sea::testing::read_file;
using sea::testing::TempDir;
namespace fs = std::filesystem;

namespace {

TrainRunConfig tiny(rl::Algorithm algo, rl::CriticKind critic, const std::string& out) {
  TrainRunConfig c;
  c.algo.algorithm = algo;
  c.net.critic = critic;
  c.net.actor_hidden = 8;
  c.net.critic_hidden = 8;
  c.net.sea_level1_width = 8;
  c.net.sea_level2_width = 8;
  c.total_steps = 200;
  c.eval_interval = 50;
  c.eval_episodes = 2;
  c.algo.rollout_length = 10;
  c.algo.ppo_minibatches = 2;
  c.algo.ppo_epochs = 2;
  c.algo.warmup_steps = 40;
  c.algo.batch_size = 8;
  c.algo.update_every = 10;
  c.algo.updates_per_round = 2;
  c.algo.buffer_capacity = 60;
  c.out_dir = out;
  return c;
}

TrainRunConfig tiny_gather(rl::Algorithm algo, rl::CriticKind critic, const std::string& out) {
  TrainRunConfig c = tiny(algo, critic, out);
  c.env = EnvKind::gather;
  c.gather.width = 8;
  c.gather.height = 8;
  c.gather.n_agents = 6;
  c.gather.n_food = 8;
  c.gather.max_steps = 30;
  c.gather.view_radius = 1;
  return c;
}

void write_metrics(const fs::path& dir, const std::vector<MetricRecord>& recs) {
  fs::create_directories(dir);
  std::ofstream out(dir / "metrics.csv");
  out << csv_header() << "\n";
  for (const auto& r : recs) out << csv_row(r) << "\n";
}

// Random but valid value for a config key.
std::string random_value(const std::string& key, Rng& rng) {
  std::uniform_int_distribution<int> small(1, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto real = [&] {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", unit(rng) * std::pow(10.0, small(rng) % 7 - 3));
    return std::string(buf);
  };
  if (key == "env") return unit(rng) < 0.5 ? "coopnav" : "gather";
  if (key == "algo") return std::vector<std::string>{"a2c", "ppo", "ddpg"}[rng() % 3];
  if (key == "critic") return std::vector<std::string>{"plain", "sea", "sea-global", "sea-local"}[rng() % 4];
  if (key == "wall_clock") return unit(rng) < 0.5 ? "true" : "false";
  if (key == "out_dir" || key == "dump_topology") return "dir_" + std::to_string(small(rng));
  TrainRunConfig probe;
  const std::string current = get_config_value(probe, key);
  if (current.find_first_of(".e") != std::string::npos || key.find("lr") != std::string::npos ||
      key == "algo.gamma" || key.find("coef") != std::string::npos)
    return real();
  if (key == "seed") return std::to_string(rng());
  return std::to_string(small(rng));
}

}  // namespace

// ---- configuration ------------------------------------------------------------

TEST_CASE("config: serialize then parse is the identity") {
  Rng rng(42);
  const auto keys = config_keys();
  for (int trial = 0; trial < 200; ++trial) {
    TrainRunConfig c;
    for (const auto& k : keys)
      if (rng() % 2) set_config_value(c, k, random_value(k, rng));
    const std::string text = serialize_config(c);
    const TrainRunConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
    for (const auto& k : keys) CHECK(get_config_value(back, k) == get_config_value(c, k));
  }
  TrainRunConfig c;
  c.algo.gamma = 0.1 + 0.2;
  CHECK(parse_config(serialize_config(c)).algo.gamma == 0.1 + 0.2);
}

TEST_CASE("config: comments, overrides and untouched defaults") {
  TrainRunConfig base;
  base.seed = 9;
  const TrainRunConfig c = parse_config("# comment\n\n algo = ppo  # trailing\ncritic=sea-local\nalgo.gamma = 0.5\n", base);
  CHECK(c.algo.algorithm == rl::Algorithm::ppo);
  CHECK(c.net.critic == rl::CriticKind::sea_local);
  CHECK(c.algo.gamma == 0.5);
  CHECK(c.seed == 9);
  CHECK(c.algo.actor_lr == TrainRunConfig{}.algo.actor_lr);
}

TEST_CASE("config: errors name the offending field") {
  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([] { parse_config("algo.gamma = abc"); }).find("algo.gamma") != std::string::npos);
  CHECK(message([] { parse_config("seed = 1\nbogus.key = 3"); }).find("bogus.key") != std::string::npos);
  CHECK(message([] { parse_config("seed = 1\nbogus.key = 3"); }).find("line 2") != std::string::npos);
  CHECK(message([] { parse_config("seed"); }).find("line 1") != std::string::npos);
  CHECK(message([] { parse_config("gather.n_agents = -3"); }).find("gather.n_agents") != std::string::npos);
  CHECK(message([] { parse_config("critic = transformer"); }).find("critic") != std::string::npos);

  TrainRunConfig c;
  c.algo.gamma = 1.5;
  CHECK(message([&] { validate_config(c); }).find("algo.gamma") != std::string::npos);
  c = {};
  c.env = EnvKind::gather;
  c.gather.n_food = 1000;
  CHECK(message([&] { validate_config(c); }).find("gather.n_food") != std::string::npos);
  c = {};
  c.dump_topology = "t.jsonl";
  CHECK(message([&] { validate_config(c); }).find("dump_topology") != std::string::npos);
  c = {};
  c.eval_interval = 0;
  CHECK(message([&] { run_training(c); }).find("eval_interval") != std::string::npos);
}

// ---- training -----------------------------------------------------------------

TEST_CASE("training: zero steps emits only the initial evaluation") {
  TempDir dir("zero");
  TrainRunConfig c = tiny(rl::Algorithm::a2c, rl::CriticKind::plain, dir.str("run"));
  c.total_steps = 0;
  TrainResult r = run_training(c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].step == 0);
  CHECK(read_metrics(dir.path() / "run/metrics.csv").size() == 1);
  CHECK(fs::exists(r.checkpoint));
  CHECK(parse_config(read_file(dir.path() / "run/config.txt")) == c);
}

TEST_CASE("training: identical configs give byte-identical metric streams") {
  for (auto algo : {rl::Algorithm::a2c, rl::Algorithm::ppo, rl::Algorithm::ddpg}) {
    for (bool gather : {false, true}) {
      CAPTURE(rl::to_string(algo));
      CAPTURE(gather);
      TempDir dir("det");
      auto make = gather ? tiny_gather : tiny;
      TrainResult a = run_training(make(algo, rl::CriticKind::sea_full, dir.str("a")));
      TrainResult b = run_training(make(algo, rl::CriticKind::sea_full, dir.str("b")));
      const std::string ma = read_file(dir.path() / "a/metrics.csv");
      CHECK(ma == read_file(dir.path() / "b/metrics.csv"));
      REQUIRE(a.records.size() == 5);
      for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].step == 50 * i);
      CHECK(a.records.back().loss_value != 0.0);
      if (gather) CHECK(a.records.back().extra1 > 0.0);
    }
  }
}

TEST_CASE("training: different seeds give different streams") {
  TempDir dir("seeds");
  TrainRunConfig c = tiny(rl::Algorithm::a2c, rl::CriticKind::plain, dir.str("a"));
  run_training(c);
  c.seed = 1;
  c.out_dir = dir.str("b");
  run_training(c);
  CHECK(read_file(dir.path() / "a/metrics.csv") != read_file(dir.path() / "b/metrics.csv"));
}

TEST_CASE("training: a resumed run matches the uninterrupted one") {
  for (auto algo : {rl::Algorithm::a2c, rl::Algorithm::ppo, rl::Algorithm::ddpg}) {
    CAPTURE(rl::to_string(algo));
    TempDir dir("resume");
    TrainRunConfig full = tiny_gather(algo, rl::CriticKind::sea_full, dir.str("full"));
    run_training(full);

    TrainRunConfig part = full;
    part.out_dir = dir.str("part");
    RunOptions stop;
    stop.stop_at = 100;
    TrainResult first = run_training(part, stop);
    CHECK(first.steps == 100);
    CHECK(first.records.back().step == 100);
    // Simulate a crash after the checkpoint: a stray record past it must go.
    std::ofstream(dir.path() / "part/metrics.csv", std::ios::app) << "150,0,1,1,1,0,0,0,0,0\n";
    RunOptions resume;
    resume.resume = true;
    TrainResult second = run_training(part, resume);
    CHECK(second.steps == 200);
    CHECK(read_file(dir.path() / "full/metrics.csv") == read_file(dir.path() / "part/metrics.csv"));

    const auto a = ad::load_checkpoint(dir.path() / "full/checkpoint.ckpt");
    const auto b = ad::load_checkpoint(dir.path() / "part/checkpoint.ckpt");
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
      CHECK(a.tensors[i].name == b.tensors[i].name);
      CHECK(a.tensors[i].value == b.tensors[i].value);
    }
    CHECK(a.meta_value("rng") == b.meta_value("rng"));
    CHECK(a.meta_value("env") == b.meta_value("env"));
  }
}

TEST_CASE("training: resume refuses a changed configuration and a missing checkpoint") {
  TempDir dir("resume_bad");
  TrainRunConfig c = tiny(rl::Algorithm::a2c, rl::CriticKind::plain, dir.str("run"));
  RunOptions resume;
  resume.resume = true;
  CHECK_THROWS_AS(run_training(c, resume), Error);
  RunOptions stop;
  stop.stop_at = 50;
  run_training(c, stop);
  c.algo.actor_lr = 0.5;
  try {
    run_training(c, resume);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("algo.actor_lr") != std::string::npos);
  }
}

TEST_CASE("training: topology dump holds one JSON record per evaluation") {
  TempDir dir("topo");
  TrainRunConfig c = tiny(rl::Algorithm::a2c, rl::CriticKind::sea_full, dir.str("run"));
  c.dump_topology = dir.str("topo.jsonl");
  run_training(c);
  std::ifstream in(c.dump_topology);
  std::string line;
  std::uint64_t expect = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["step"].get<std::uint64_t>() == expect);
    CHECK(j.contains("topology"));
    expect += 50;
  }
  CHECK(expect == 250);
}

// ---- evaluation ---------------------------------------------------------------

TEST_CASE("eval: ratio column and its zero-death guard") {
  const GatherRatio r = gather_ratio(1845, 217);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", r.value);
  CHECK(std::string(buf) == "8.50");
  CHECK_FALSE(r.zero_deaths);
  const GatherRatio z = gather_ratio(37, 0);
  CHECK(z.value == 37.0);
  CHECK(z.zero_deaths);
}

TEST_CASE("eval: a checkpoint reproduces the final evaluation exactly") {
  TempDir dir("eval");
  for (bool gather : {false, true}) {
    auto make = gather ? tiny_gather : tiny;
    TrainRunConfig c = make(rl::Algorithm::ppo, rl::CriticKind::sea_local, dir.str(gather ? "g" : "c"));
    TrainResult r = run_training(c);
    const EvalSummary e = run_eval(r.checkpoint, c.eval_episodes, derive_seed(c.seed, 4));
    CHECK(e.return_mean == r.final_eval.return_mean);
    CHECK(e.return_min == r.final_eval.return_min);
    CHECK(e.return_max == r.final_eval.return_max);
    CHECK(e.absorbed == r.final_eval.absorbed);
    CHECK(e.deaths == r.final_eval.deaths);
    CHECK(e.return_min <= e.return_mean);
    CHECK(e.return_mean <= e.return_max);

    const EvalSummary x = run_eval(r.checkpoint, 10, 77);
    const EvalSummary y = run_eval(r.checkpoint, 10, 77);
    CHECK(x.return_mean == y.return_mean);
    CHECK(x.episodes == 10);
    if (gather) {
      const GatherRatio g = gather_ratio(x.absorbed, x.deaths);
      CHECK(x.ratio == g.value);
      CHECK(x.zero_deaths == g.zero_deaths);
    } else {
      CHECK(x.absorbed == 0);
      CHECK(x.ratio == 0.0);
    }
  }
}

TEST_CASE("eval: a checkpoint that does not fit the environment is rejected") {
  TempDir dir("eval_bad");
  TrainRunConfig c = tiny(rl::Algorithm::a2c, rl::CriticKind::plain, dir.str("run"));
  c.total_steps = 0;
  TrainResult r = run_training(c);
  TrainRunConfig other = c;
  other.coopnav.n_landmarks = 4;
  CHECK_THROWS_AS(run_eval(r.checkpoint, 1, 0, &other), Error);
  other = c;
  other.env = EnvKind::gather;
  CHECK_THROWS_AS(run_eval(r.checkpoint, 1, 0, &other), Error);
  CHECK_THROWS_AS(run_eval(dir.path() / "missing.ckpt", 1, 0), Error);
}

// ---- export -------------------------------------------------------------------

TEST_CASE("export: mean, min and max across seeds") {
  TempDir dir("export");
  Rng rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<std::vector<MetricRecord>> runs(5);
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::uint64_t step : {0, 100, 200, 300}) {
      MetricRecord r;
      r.step = step;
      r.return_mean = std::round(u(rng) * 1000) / 1000;
      r.loss_value = std::round(u(rng) * 1000) / 1000;
      r.extra2 = double(s);
      runs[s].push_back(r);
    }
    write_metrics(dir.path() / "sweep" / ("seed_" + std::to_string(s)), runs[s]);
  }
  const auto used = export_metrics({dir.path() / "sweep"}, dir.path() / "out");
  CHECK(used.size() == 5);
  for (std::size_t s = 0; s < 5; ++s) CHECK(fs::exists(dir.path() / "out" / ("seed_" + std::to_string(s) + ".csv")));

  std::ifstream in(dir.path() / "out/combined.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("step,seconds_mean,seconds_min,seconds_max,return_mean_mean", 0) == 0);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  REQUIRE(rows.size() == 4);
  // Spot checks on three rows against hand sums.
  for (std::size_t i : {0, 2, 3}) {
    double sum = 0, lo = 1e9, hi = -1e9;
    for (const auto& r : runs) {
      sum += r[i].return_mean;
      lo = std::min(lo, r[i].return_mean);
      hi = std::max(hi, r[i].return_mean);
    }
    CHECK(rows[i][0] == double(runs[0][i].step));
    CHECK(rows[i][4] == doctest::Approx(sum / 5).epsilon(1e-9));
    CHECK(rows[i][5] == lo);
    CHECK(rows[i][6] == hi);
    CHECK(rows[i][25] == doctest::Approx(2.0));  // extra2 mean of 0..4
  }
}

TEST_CASE("export: a single run duplicates itself in every aggregate") {
  TempDir dir("export1");
  std::vector<MetricRecord> recs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    recs[i].step = 10 * i;
    recs[i].return_mean = 1.25 * double(i);
    recs[i].entropy = -0.5 * double(i);
  }
  write_metrics(dir.path() / "run", recs);
  export_metrics({dir.path() / "run"}, dir.path() / "out");
  CHECK(read_file(dir.path() / "out/run.csv") == read_file(dir.path() / "run/metrics.csv"));
  std::ifstream in(dir.path() / "out/combined.csv");
  std::string line;
  std::getline(in, line);
  for (std::size_t i = 0; i < 3; ++i) {
    std::getline(in, line);
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    const auto v = recs[i].values();
    for (std::size_t c = 0; c < 9; ++c) {
      CHECK(row[1 + 3 * c] == v[c]);
      CHECK(row[2 + 3 * c] == v[c]);
      CHECK(row[3 + 3 * c] == v[c]);
    }
  }
}

TEST_CASE("export: mismatched grids, interpolation and empty input") {
  TempDir dir("export2");
  std::vector<MetricRecord> a(3), b(2);
  for (std::size_t i = 0; i < 3; ++i) {
    a[i].step = 100 * i;
    a[i].return_mean = 1.0;
  }
  b[0].step = 0;
  b[0].return_mean = 0.0;
  b[1].step = 200;
  b[1].return_mean = 4.0;
  write_metrics(dir.path() / "runs/a", a);
  write_metrics(dir.path() / "runs/b", b);
  try {
    export_metrics({dir.path() / "runs"}, dir.path() / "out");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("--interpolate") != std::string::npos);
  }
  export_metrics({dir.path() / "runs"}, dir.path() / "out", {.interpolate = true});
  std::ifstream in(dir.path() / "out/combined.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);  // step 100: b interpolates to 2.0, mean (1 + 2) / 2
  CHECK(line.rfind("100,0,0,0,1.5,1,2", 0) == 0);

  fs::create_directories(dir.path() / "empty");
  CHECK_THROWS_AS(export_metrics({dir.path() / "empty"}, dir.path() / "out"), Error);
  CHECK_THROWS_AS(export_metrics({dir.path() / "nope"}, dir.path() / "out"), Error);
}

TEST_CASE("metrics: csv rows round trip and steps must increase") {
  MetricRecord r;
  r.step = 12345;
  r.return_mean = -3.25;
  r.loss_policy = 1e-7;
  r.extra1 = 16;
  const MetricRecord back = parse_csv_row(csv_row(r));
  CHECK(back.step == r.step);
  CHECK(back.values() == r.values());
  CHECK_THROWS_AS(parse_csv_row("1,2,3"), Error);
  TempDir dir("csv");
  std::vector<MetricRecord> recs(2);
  recs[0].step = 5;
  recs[1].step = 5;
  write_metrics(dir.path() / "r", recs);
  CHECK_THROWS_AS(read_metrics(dir.path() / "r/metrics.csv"), Error);
}

// ---- sweeps -------------------------------------------------------------------

TEST_CASE("sweep: parallel workers match standalone runs") {
  TempDir dir("sweep");
  TrainRunConfig base = tiny(rl::Algorithm::a2c, rl::CriticKind::sea_global, dir.str("sweep"));
  base.total_steps = 100;
  const auto results = run_sweep(base, {3, 5});
  REQUIRE(results.size() == 2);
  TrainRunConfig solo = base;
  solo.seed = 5;
  solo.out_dir = dir.str("solo");
  run_training(solo);
  CHECK(read_file(dir.path() / "sweep/seed_5/metrics.csv") == read_file(dir.path() / "solo/metrics.csv"));
  CHECK(read_file(dir.path() / "sweep/seed_3/metrics.csv") != read_file(dir.path() / "solo/metrics.csv"));

  std::vector<TrainRunConfig> clash{base, base};
  CHECK_THROWS_AS(run_many(clash), Error);
}

TEST_CASE("sweep: seed lists") {
  CHECK(parse_seed_list("0-4") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(parse_seed_list("7,1-2") == std::vector<std::uint64_t>{7, 1, 2});
  CHECK_THROWS_AS(parse_seed_list(""), Error);
  CHECK_THROWS_AS(parse_seed_list("3-1"), Error);
  CHECK_THROWS_AS(parse_seed_list("a"), Error);
}
