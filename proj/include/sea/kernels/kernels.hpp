#pragma once

// Dense kernels behind the autodiff engine and the spatial grouping code.
//
// Two implementations with identical signatures live side by side: `serial`
// is the plain reference, `omp` splits the outer loop across OpenMP threads.
// Each output element is accumulated by exactly one thread in the same order
// as the serial loop, so both produce bit-identical results.

#include <cstddef>
#include <span>

namespace sea::kernels {

// Y[n×out] = X[n×in] · W[out×in]^T + b[out]   (b may be empty)
// W is given pre-transposed as Wt[in×out].
struct LinearShape {
  std::size_t rows;
  std::size_t in;
  std::size_t out;
};

namespace serial {

void linear_forward(LinearShape s, std::span<const double> x, std::span<const double> wt,
                    std::span<const double> bias, std::span<double> y);
// dX[n×in] += dY[n×out] · W[out×in]
void linear_backward_input(LinearShape s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx);
// dW[out×in] += dY^T · X ; db[out] += column sums of dY (db may be empty)
void linear_backward_weight(LinearShape s, std::span<const double> dy, std::span<const double> x,
                            std::span<double> dw, std::span<double> db);
// D[i*m + j] = |p_i - q_j|^2 for 2-D points stored as (x, y) pairs.
void pairwise_sq_dist(std::span<const double> p, std::span<const double> q, std::span<double> d);

}  // namespace serial

namespace omp {

void linear_forward(LinearShape s, std::span<const double> x, std::span<const double> wt,
                    std::span<const double> bias, std::span<double> y);
void linear_backward_input(LinearShape s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx);
void linear_backward_weight(LinearShape s, std::span<const double> dy, std::span<const double> x,
                            std::span<double> dw, std::span<double> db);
void pairwise_sq_dist(std::span<const double> p, std::span<const double> q, std::span<double> d);

}  // namespace omp

// Work below this many multiply-adds stays on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

}  // namespace sea::kernels
