#include "sea/ad/tape.hpp"

#include <algorithm>
#include <cmath>

#include "sea/kernels/kernels.hpp"

namespace sea::ad {

namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw Error(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_same_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error(std::string(op) + ": operands live on different tapes");
}

// Elementwise unary op: value_fn(x) forward, deriv_fn(x, y) backward factor.
template <typename F, typename D>
Var unary(Var a, F value_fn, D deriv_fn) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = value_fn(x.data()[i]);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, deriv_fn](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value(ia);
    const Matrix& yv = t.value(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data()[i] += g.data()[i] * deriv_fn(xv.data()[i], yv.data()[i]);
  });
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

Matrix Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad(id_);
  return Matrix::zeros_like(value());
}

Var Tape::constant(Matrix m) {
  nodes_.push_back(Node{std::move(m), {}, {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Matrix m) {
  nodes_.push_back(Node{std::move(m), {}, {}, {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, {}, &p, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, Backprop fn) {
  bool rg = false;
  for (std::size_t i : inputs) rg = rg || nodes_[i].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), rg ? std::move(fn) : Backprop{}, nullptr, rg});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw Error("backward: root belongs to another tape");
  const Matrix& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw Error("backward: root must be 1x1, got " + rv.shape_string());
  }
  for (Node& n : nodes_) n.grad = Matrix();
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Matrix(1, 1, 1.0);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, id);
    if (n.param != nullptr) {
      if (n.param->grad.empty()) n.param->grad = Matrix::zeros_like(n.param->value);
      n.param->grad += n.grad;
    }
  }
}

// ---- operations ------------------------------------------------------------

Var linear(Var x, Var w, Var b) {
  require_same_tape("linear", x, w);
  require_same_tape("linear", x, b);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  if (xv.cols() != wv.cols()) {
    throw Error("linear: input width " + std::to_string(xv.cols()) + " does not match weight " +
                wv.shape_string());
  }
  if (bv.size() != wv.rows()) {
    throw Error("linear: bias " + bv.shape_string() + " does not match weight " + wv.shape_string());
  }
  const kernels::LinearShape s{xv.rows(), wv.cols(), wv.rows()};
  const Matrix wt = wv.transposed();
  Matrix y(s.rows, s.out);
  kernels::omp::linear_forward(s, xv.values(), wt.values(), bv.values(), y.values());
  const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  return x.tape().record(std::move(y), {ix, iw, ib}, [ix, iw, ib, s](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ix)) {
      kernels::omp::linear_backward_input(s, g.values(), t.value(iw).values(),
                                          t.grad_accumulator(ix).values());
    }
    const bool gw = t.requires_grad(iw);
    const bool gb = t.requires_grad(ib);
    if (gw) {
      std::span<double> db;
      if (gb) db = t.grad_accumulator(ib).values();
      kernels::omp::linear_backward_weight(s, g.values(), t.value(ix).values(),
                                           t.grad_accumulator(iw).values(), db);
    } else if (gb) {
      Matrix& db = t.grad_accumulator(ib);
      for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t o = 0; o < s.out; ++o) db.data()[o] += g(i, o);
    }
  });
}

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw Error("matmul: inner dimension mismatch " + av.shape_string() + " vs " + bv.shape_string());
  }
  // a · b == linear(a, b^T) with no bias
  const kernels::LinearShape s{av.rows(), av.cols(), bv.cols()};
  Matrix y(s.rows, s.out);
  kernels::omp::linear_forward(s, av.values(), bv.values(), {}, y.values());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {ia, ib}, [ia, ib, s](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      const Matrix bt = t.value(ib).transposed();
      kernels::omp::linear_backward_input(s, g.values(), bt.values(), t.grad_accumulator(ia).values());
    }
    if (t.requires_grad(ib)) {
      Matrix dbt(s.out, s.in);
      kernels::omp::linear_backward_weight(s, g.values(), t.value(ia).values(), dbt.values(), {});
      t.grad_accumulator(ib) += dbt.transposed();
    }
  });
}

namespace {

template <typename F, typename Da, typename Db>
Var binary(const char* op, Var a, Var b, F f, Da da, Db db) {
  require_same_tape(op, a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(op, av, bv);
  Matrix y(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) y.data()[i] = f(av.data()[i], bv.data()[i]);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {ia, ib}, [ia, ib, da, db](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ia);
    const Matrix& z = t.value(ib);
    if (t.requires_grad(ia)) {
      Matrix& ga = t.grad_accumulator(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * da(x.data()[i], z.data()[i]);
    }
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_accumulator(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * db(x.data()[i], z.data()[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var maximum(Var a, Var b) {
  return binary(
      "maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Var minimum(Var a, Var b) {
  return binary(
      "minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Var add_row(Var x, Var row) {
  require_same_tape("add_row", x, row);
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw Error("add_row: row " + rv.shape_string() + " does not broadcast over " + xv.shape_string());
  }
  Matrix y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += rv(0, c);
  const std::size_t ix = x.id(), ir = row.id();
  return x.tape().record(std::move(y), {ix, ir}, [ix, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ix)) t.grad_accumulator(ix) += g;
    if (t.requires_grad(ir)) {
      Matrix& gr = t.grad_accumulator(ir);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clip(Var a, double lo, double hi) {
  if (lo > hi) throw Error("clip: lo > hi");
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var clip(Var a, const Matrix& lo, const Matrix& hi) {
  const Matrix& x = a.value();
  require_same_shape("clip", x, lo);
  require_same_shape("clip", x, hi);
  Matrix y(x.rows(), x.cols());
  Matrix pass(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = lo.data()[i];
    const double h = hi.data()[i];
    if (l > h) throw Error("clip: lo > hi at entry " + std::to_string(i));
    const double v = x.data()[i];
    y.data()[i] = std::clamp(v, l, h);
    pass.data()[i] = (v < l || v > h) ? 0.0 : 1.0;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, pass = std::move(pass)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * pass.data()[i];
  });
}

Var sum(Var a) {
  const Matrix& x = a.value();
  double s = 0.0;
  for (double v : x.values()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record(Matrix(1, 1, s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    Matrix& ga = t.grad_accumulator(ia);
    for (double& v : ga.values()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw Error("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_cols(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : x.row_span(r)) s += v;
    y(r, 0) = s;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0);
  });
}

Var segment_max(Var a, std::vector<std::vector<std::size_t>> segments) {
  const Matrix& x = a.value();
  const std::size_t f = x.cols();
  Matrix y(segments.size(), f);
  // argmax[s * f + c] = input row that won column c of segment s
  std::vector<std::size_t> argmax(segments.size() * f);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& members = segments[s];
    if (members.empty()) throw Error("segment_max: segment " + std::to_string(s) + " is empty");
    for (std::size_t r : members) {
      if (r >= x.rows()) throw Error("segment_max: row index " + std::to_string(r) + " out of range");
    }
    for (std::size_t c = 0; c < f; ++c) {
      std::size_t best = members.front();
      double bv = x(best, c);
      for (std::size_t m = 1; m < members.size(); ++m) {
        const double v = x(members[m], c);
        if (v > bv) {
          bv = v;
          best = members[m];
        }
      }
      y(s, c) = bv;
      argmax[s * f + c] = best;
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, f, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t s = 0; s < g.rows(); ++s)
      for (std::size_t c = 0; c < f; ++c) ga(argmax[s * f + c], c) += g(s, c);
  });
}

Var max_reduce_rows(Var a) {
  const std::size_t n = a.value().rows();
  if (n == 0) throw Error("max_reduce_rows: empty input (0 rows)");
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  return segment_max(a, {std::move(all)});
}

Var gather_rows(Var a, std::vector<std::size_t> rows) {
  const Matrix& x = a.value();
  Matrix y(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) throw Error("gather_rows: row index " + std::to_string(rows[i]) + " out of range");
    std::copy_n(x.row_span(rows[i]).data(), x.cols(), y.row_span(i).data());
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, rows = std::move(rows)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(rows[i], c) += g(i, c);
  });
}

Var mix_rows(Var a, std::vector<RowMix> mix) {
  const Matrix& x = a.value();
  Matrix y(mix.size(), x.cols());
  for (std::size_t q = 0; q < mix.size(); ++q) {
    const RowMix& m = mix[q];
    if (m.sources.size() != m.weights.size()) throw Error("mix_rows: sources/weights length mismatch");
    auto yr = y.row_span(q);
    for (std::size_t j = 0; j < m.sources.size(); ++j) {
      if (m.sources[j] >= x.rows()) throw Error("mix_rows: source index out of range");
      const double w = m.weights[j];
      auto xr = x.row_span(m.sources[j]);
      for (std::size_t c = 0; c < yr.size(); ++c) yr[c] += w * xr[c];
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, mix = std::move(mix)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t q = 0; q < mix.size(); ++q) {
      auto gr = g.row_span(q);
      for (std::size_t j = 0; j < mix[q].sources.size(); ++j) {
        const double w = mix[q].weights[j];
        auto dst = ga.row_span(mix[q].sources[j]);
        for (std::size_t c = 0; c < gr.size(); ++c) dst[c] += w * gr[c];
      }
    }
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape("concat_cols", a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw Error("concat_cols: row mismatch " + av.shape_string() + " vs " + bv.shape_string());
  }
  const std::size_t ca = av.cols(), cb = bv.cols();
  Matrix y(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.row_span(r).data(), ca, y.row_span(r).data());
    std::copy_n(bv.row_span(r).data(), cb, y.row_span(r).data() + ca);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {ia, ib}, [ia, ib, ca, cb](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Matrix& ga = t.grad_accumulator(ia);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < ca; ++c) ga(r, c) += g(r, c);
    }
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_accumulator(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cb; ++c) gb(r, c) += g(r, ca + c);
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Matrix& x = a.value();
  if (begin > end || end > x.cols()) throw Error("slice_cols: range out of bounds for " + x.shape_string());
  const std::size_t w = end - begin;
  Matrix y(x.rows(), w);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < w; ++c) y(r, c) = x(r, begin + c);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, begin, w](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < w; ++c) ga(r, begin + c) += g(r, c);
  });
}

Var log_softmax(Var logits) {
  const Matrix& x = logits.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row_span(r);
    const double m = *std::max_element(xr.begin(), xr.end());
    double s = 0.0;
    for (double v : xr) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < xr.size(); ++c) y(r, c) = xr[c] - lse;
  }
  const std::size_t ia = logits.id();
  return logits.tape().record(std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& ly = t.value(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double gs = 0.0;
      for (double v : g.row_span(r)) gs += v;
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) - std::exp(ly(r, c)) * gs;
    }
  });
}

Var softmax(Var logits) { return exp(log_softmax(logits)); }

Var pick(Var a, std::vector<std::size_t> columns) {
  const Matrix& x = a.value();
  if (columns.size() != x.rows()) throw Error("pick: need one column per row");
  Matrix y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (columns[r] >= x.cols()) throw Error("pick: column " + std::to_string(columns[r]) + " out of range");
    y(r, 0) = x(r, columns[r]);
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, columns = std::move(columns)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_accumulator(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) ga(r, columns[r]) += g(r, 0);
  });
}

Var mse(Var pred, Var target) {
  require_same_shape("mse", pred.value(), target.value());
  return mean(square(sub(pred, target)));
}

Var categorical_log_prob(Var logits, std::size_t action) {
  if (logits.rows() != 1) throw Error("categorical_log_prob: expected a single row, got " + logits.value().shape_string());
  return pick(log_softmax(logits), {action});
}

Var categorical_log_probs(Var logits, std::vector<std::size_t> actions) {
  return pick(log_softmax(logits), std::move(actions));
}

}  // namespace sea::ad
