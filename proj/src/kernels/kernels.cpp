#include "sea/kernels/kernels.hpp"

#include <cstdint>

namespace sea::kernels {

namespace {

inline void forward_row(LinearShape s, const double* __restrict xr, const double* __restrict wt,
                        const double* __restrict bias, double* __restrict yr) {
  if (bias != nullptr) {
    for (std::size_t o = 0; o < s.out; ++o) yr[o] = bias[o];
  } else {
    for (std::size_t o = 0; o < s.out; ++o) yr[o] = 0.0;
  }
  for (std::size_t k = 0; k < s.in; ++k) {
    const double a = xr[k];
    const double* wk = wt + k * s.out;
    for (std::size_t o = 0; o < s.out; ++o) yr[o] += a * wk[o];
  }
}

inline void backward_input_row(LinearShape s, const double* __restrict dyr, const double* __restrict w,
                               double* __restrict dxr) {
  for (std::size_t o = 0; o < s.out; ++o) {
    const double g = dyr[o];
    const double* wo = w + o * s.in;
    for (std::size_t k = 0; k < s.in; ++k) dxr[k] += g * wo[k];
  }
}

inline void backward_weight_row(LinearShape s, std::size_t o, const double* __restrict dy,
                                const double* __restrict x, double* __restrict dw, double* __restrict db) {
  double* dwo = dw + o * s.in;
  double bsum = 0.0;
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double g = dy[i * s.out + o];
    bsum += g;
    const double* xi = x + i * s.in;
    for (std::size_t k = 0; k < s.in; ++k) dwo[k] += g * xi[k];
  }
  if (db != nullptr) db[o] += bsum;
}

inline void dist_row(std::size_t i, std::size_t m, const double* p, const double* q, double* d) {
  const double px = p[2 * i];
  const double py = p[2 * i + 1];
  for (std::size_t j = 0; j < m; ++j) {
    const double dx = px - q[2 * j];
    const double dy = py - q[2 * j + 1];
    d[i * m + j] = dx * dx + dy * dy;
  }
}

}  // namespace

namespace serial {

void linear_forward(LinearShape s, std::span<const double> x, std::span<const double> wt,
                    std::span<const double> bias, std::span<double> y) {
  const double* b = bias.empty() ? nullptr : bias.data();
  for (std::size_t i = 0; i < s.rows; ++i)
    forward_row(s, x.data() + i * s.in, wt.data(), b, y.data() + i * s.out);
}

void linear_backward_input(LinearShape s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  for (std::size_t i = 0; i < s.rows; ++i)
    backward_input_row(s, dy.data() + i * s.out, w.data(), dx.data() + i * s.in);
}

void linear_backward_weight(LinearShape s, std::span<const double> dy, std::span<const double> x,
                            std::span<double> dw, std::span<double> db) {
  double* b = db.empty() ? nullptr : db.data();
  for (std::size_t o = 0; o < s.out; ++o) backward_weight_row(s, o, dy.data(), x.data(), dw.data(), b);
}

void pairwise_sq_dist(std::span<const double> p, std::span<const double> q, std::span<double> d) {
  const std::size_t n = p.size() / 2;
  const std::size_t m = q.size() / 2;
  for (std::size_t i = 0; i < n; ++i) dist_row(i, m, p.data(), q.data(), d.data());
}

}  // namespace serial

namespace omp {

void linear_forward(LinearShape s, std::span<const double> x, std::span<const double> wt,
                    std::span<const double> bias, std::span<double> y) {
  const double* b = bias.empty() ? nullptr : bias.data();
  const auto rows = static_cast<std::int64_t>(s.rows);
  const bool big = s.rows * s.in * s.out >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i)
    forward_row(s, x.data() + i * s.in, wt.data(), b, y.data() + i * s.out);
}

void linear_backward_input(LinearShape s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  const auto rows = static_cast<std::int64_t>(s.rows);
  const bool big = s.rows * s.in * s.out >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i)
    backward_input_row(s, dy.data() + i * s.out, w.data(), dx.data() + i * s.in);
}

void linear_backward_weight(LinearShape s, std::span<const double> dy, std::span<const double> x,
                            std::span<double> dw, std::span<double> db) {
  double* b = db.empty() ? nullptr : db.data();
  const auto outs = static_cast<std::int64_t>(s.out);
  const bool big = s.rows * s.in * s.out >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t o = 0; o < outs; ++o)
    backward_weight_row(s, static_cast<std::size_t>(o), dy.data(), x.data(), dw.data(), b);
}

void pairwise_sq_dist(std::span<const double> p, std::span<const double> q, std::span<double> d) {
  const auto n = static_cast<std::int64_t>(p.size() / 2);
  const std::size_t m = q.size() / 2;
  const bool big = static_cast<std::size_t>(n) * m >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < n; ++i) dist_row(static_cast<std::size_t>(i), m, p.data(), q.data(), d.data());
}

}  // namespace omp

}  // namespace sea::kernels
