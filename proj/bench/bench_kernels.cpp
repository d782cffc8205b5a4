// Serial reference kernels against their OpenMP counterparts, plus one
// end-to-end SEA forward/backward pass. Set OMP_NUM_THREADS to vary the
// thread count of the omp variants.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sea/kernels/kernels.hpp"
#include "sea/spatial/sea.hpp"

namespace {

namespace k = sea::kernels;

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

k::LinearShape shape_of(const benchmark::State& st) {
  return {static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)),
          static_cast<std::size_t>(st.range(1))};
}

template <auto Fn>
void BM_forward(benchmark::State& st) {
  const auto s = shape_of(st);
  const auto x = random_vec(s.rows * s.in, 1), wt = random_vec(s.in * s.out, 2), b = random_vec(s.out, 3);
  std::vector<double> y(s.rows * s.out);
  for (auto _ : st) {
    Fn(s, x, wt, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.rows * s.in * s.out));
}

template <auto Fn>
void BM_backward_input(benchmark::State& st) {
  const auto s = shape_of(st);
  const auto dy = random_vec(s.rows * s.out, 1), w = random_vec(s.in * s.out, 2);
  std::vector<double> dx(s.rows * s.in);
  for (auto _ : st) {
    Fn(s, dy, w, dx);
    benchmark::DoNotOptimize(dx.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.rows * s.in * s.out));
}

template <auto Fn>
void BM_backward_weight(benchmark::State& st) {
  const auto s = shape_of(st);
  const auto dy = random_vec(s.rows * s.out, 1), x = random_vec(s.rows * s.in, 2);
  std::vector<double> dw(s.in * s.out), db(s.out);
  for (auto _ : st) {
    Fn(s, dy, x, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.rows * s.in * s.out));
}

template <auto Fn>
void BM_pairwise(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto p = random_vec(2 * n, 1), q = random_vec(2 * n, 2);
  std::vector<double> d(n * n);
  for (auto _ : st) {
    Fn(p, q, d);
    benchmark::DoNotOptimize(d.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n));
}

void linear_args(benchmark::internal::Benchmark* b) {
  for (int rows : {64, 512, 4096})
    for (int width : {32, 128}) b->Args({rows, width});
}

BENCHMARK(BM_forward<k::serial::linear_forward>)->Name("linear_forward/serial")->Apply(linear_args);
BENCHMARK(BM_forward<k::omp::linear_forward>)->Name("linear_forward/omp")->Apply(linear_args);
BENCHMARK(BM_backward_input<k::serial::linear_backward_input>)->Name("linear_backward_input/serial")->Apply(linear_args);
BENCHMARK(BM_backward_input<k::omp::linear_backward_input>)->Name("linear_backward_input/omp")->Apply(linear_args);
BENCHMARK(BM_backward_weight<k::serial::linear_backward_weight>)->Name("linear_backward_weight/serial")->Apply(linear_args);
BENCHMARK(BM_backward_weight<k::omp::linear_backward_weight>)->Name("linear_backward_weight/omp")->Apply(linear_args);
BENCHMARK(BM_pairwise<k::serial::pairwise_sq_dist>)->Name("pairwise_sq_dist/serial")->Arg(64)->Arg(512)->Arg(2048);
BENCHMARK(BM_pairwise<k::omp::pairwise_sq_dist>)->Name("pairwise_sq_dist/omp")->Arg(64)->Arg(512)->Arg(2048);

// One SEA extractor forward and backward over a batch of frames.
void BM_sea_step(benchmark::State& st) {
  const auto agents = static_cast<std::size_t>(st.range(0));
  const std::size_t frames = 32, dim = 20;
  sea::Rng rng(5);
  sea::spatial::SeaConfig cfg;
  cfg.in_dim = dim;
  cfg.level1_width = 32;
  cfg.level2_width = 64;
  auto params = sea::spatial::SeaParams::create(cfg, "sea", rng);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<sea::spatial::FrameTopology> topo;
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<sea::spatial::Vec2> pts(agents);
    for (auto& p : pts) p = {u(rng), u(rng)};
    topo.push_back(sea::spatial::build_topology(pts, cfg));
  }
  sea::ad::Matrix x(frames * agents, dim);
  for (double& v : x.values()) v = u(rng);
  for (auto _ : st) {
    sea::ad::Tape tape;
    sea::ad::Var out = sea::spatial::sea_forward(tape, params, tape.constant(x), topo);
    tape.backward(sea::ad::sum(out));
    for (auto* p : params.parameters()) p->zero_grad();
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(frames * agents));
}
BENCHMARK(BM_sea_step)->Arg(6)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
