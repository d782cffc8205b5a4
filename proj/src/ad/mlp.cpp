#include "sea/ad/mlp.hpp"

#include <cmath>

#include "sea/kernels/kernels.hpp"

namespace sea::ad {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw Error("activation: unknown tag '" + s + "'");
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& dims,
         const std::vector<Activation>& activations, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw Error("Mlp " + name + ": need dims.size() - 1 activations");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    if (in == 0 || out == 0) throw Error("Mlp " + name + ": layer " + std::to_string(l) + " has a zero dimension");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(out, in), b(out, 1);
    for (double& v : w.values()) v = u(rng);
    for (double& v : b.values()) v = u(rng);
    const std::string prefix = name + "." + std::to_string(l);
    layers_.push_back(DenseLayer{Parameter(prefix + ".weight", std::move(w)),
                                 Parameter(prefix + ".bias", std::move(b)), activations[l]});
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_chain(); }

Mlp Mlp::make(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
              std::size_t depth, Activation hidden_act, Activation out_act, Rng& rng) {
  if (depth == 0) throw Error("Mlp " + name + ": depth must be at least 1");
  std::vector<std::size_t> dims{in};
  std::vector<Activation> acts;
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    dims.push_back(hidden);
    acts.push_back(hidden_act);
  }
  dims.push_back(out);
  acts.push_back(out_act);
  return Mlp(name, dims, acts, rng);
}

void Mlp::check_chain() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& L = layers_[l];
    if (L.bias.value.size() != L.out()) {
      throw Error("Mlp: layer " + std::to_string(l) + " bias does not match weight rows");
    }
    if (l > 0 && L.in() != layers_[l - 1].out()) {
      throw Error("Mlp: layer " + std::to_string(l) + " input " + std::to_string(L.in()) +
                  " does not chain with previous output " + std::to_string(layers_[l - 1].out()));
    }
  }
}

namespace {

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

void activate_in_place(Matrix& m, Activation a) {
  switch (a) {
    case Activation::relu:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : m.values()) v = std::tanh(v);
      break;
    case Activation::identity: break;
  }
}

}  // namespace

Var Mlp::forward(Tape& tape, Var x) {
  if (layers_.empty()) throw Error("mlp_forward: network has no layers");
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    DenseLayer& L = layers_[l];
    if (h.cols() != L.in()) {
      throw Error("mlp_forward: layer " + std::to_string(l) + " expects input width " +
                  std::to_string(L.in()) + ", got " + std::to_string(h.cols()));
    }
    h = activate(linear(h, tape.param(L.weight), tape.param(L.bias)), L.activation);
  }
  return h;
}

Matrix Mlp::evaluate(const Matrix& x) const {
  if (layers_.empty()) throw Error("mlp_forward: network has no layers");
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& L = layers_[l];
    if (h.cols() != L.in()) {
      throw Error("mlp_forward: layer " + std::to_string(l) + " expects input width " +
                  std::to_string(L.in()) + ", got " + std::to_string(h.cols()));
    }
    const kernels::LinearShape s{h.rows(), L.in(), L.out()};
    const Matrix wt = L.weight.value.transposed();
    Matrix y(s.rows, s.out);
    kernels::omp::linear_forward(s, h.values(), wt.values(), L.bias.value.values(), y.values());
    activate_in_place(y, L.activation);
    h = std::move(y);
  }
  return h;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (DenseLayer& L : layers_) {
    out.push_back(&L.weight);
    out.push_back(&L.bias);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (const DenseLayer& L : layers_) {
    out.push_back(&L.weight);
    out.push_back(&L.bias);
  }
  return out;
}

Var mlp_forward(Mlp& params, Tape& tape, Var input) { return params.forward(tape, input); }

}  // namespace sea::ad
