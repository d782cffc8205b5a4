#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in creation order, which is already a
// topological order: an operation's inputs always exist before it does.
// backward() therefore sweeps node ids downward from the root, visiting each
// node once. Gradients are allocated lazily; a node that the sweep never
// reaches keeps an empty gradient and contributes nothing.
//
// Parameters live outside the tape. param() copies the current value onto the
// tape and, after backward(), adds the leaf's gradient into Parameter::grad.
// Callers zero parameter gradients between steps.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sea/ad/matrix.hpp"

namespace sea::ad {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::zeros_like(value)) {}
  void zero_grad() { grad = Matrix::zeros_like(value); }
};

class Tape;

// Lightweight handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  // Gradient after backward(); zeros if the node was not reached.
  Matrix grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Matrix m);
  // Leaf that receives a gradient (readable through Var::grad()).
  Var variable(Matrix m);
  // Leaf bound to an external parameter.
  Var param(Parameter& p);

  // Appends an operation node. `fn` reads grad(self) and accumulates into its inputs.
  Var record(Matrix value, std::vector<std::size_t> inputs, Backprop fn);

  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  // Gradient buffer of `id`, allocated as zeros on first use.
  Matrix& grad_accumulator(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// ---- operations ----------------------------------------------------------

// x[n×in] · w[out×in]^T + b[out×1]^T  ->  [n×out]
Var linear(Var x, Var w, Var b);
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// x[n×c] + row[1×c] broadcast over rows
Var add_row(Var x, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
// Per-row sum -> [n×1]
Var sum_cols(Var a);
// Elementwise clamp into [lo, hi]; zero gradient where the clamp is active.
Var clip(Var a, double lo, double hi);
Var clip(Var a, const Matrix& lo, const Matrix& hi);
// Elementwise max/min; ties send the gradient to the first argument.
Var maximum(Var a, Var b);
Var minimum(Var a, Var b);
// Column-wise maximum over rows -> [1×F]; ties route to the lowest row index.
Var max_reduce_rows(Var a);
// One output row per segment: column-wise max over the listed input rows.
// Ties route to the member listed first.
Var segment_max(Var a, std::vector<std::vector<std::size_t>> segments);
Var gather_rows(Var a, std::vector<std::size_t> rows);
// out[q] = sum_j weights[q][j] * a[sources[q][j]]; weights are constants.
struct RowMix {
  std::vector<std::size_t> sources;
  std::vector<double> weights;
};
Var mix_rows(Var a, std::vector<RowMix> mix);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
// Row-wise log-softmax.
Var log_softmax(Var logits);
// Select one column per row -> [n×1].
Var pick(Var a, std::vector<std::size_t> columns);
Var softmax(Var logits);

// ---- losses ----------------------------------------------------------------

Var mse(Var pred, Var target);
// log pi(action | logits) for a single 1×A row of logits -> 1×1.
Var categorical_log_prob(Var logits, std::size_t action);
// Batched form: one action per row -> [n×1].
Var categorical_log_probs(Var logits, std::vector<std::size_t> actions);

}  // namespace sea::ad
