#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sea/ad/tape.hpp"
#include "sea/rng.hpp"

namespace sea::ad {

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  Parameter weight;  // out × in
  Parameter bias;    // out × 1
  Activation activation = Activation::identity;

  std::size_t in() const { return weight.value.cols(); }
  std::size_t out() const { return weight.value.rows(); }
};

// Fully connected network: affine map followed by an activation, per layer.
class Mlp {
 public:
  Mlp() = default;
  // dims = {in, h1, ..., out}; one activation per layer (dims.size() - 1 of them).
  // Weights and biases are drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Mlp(const std::string& name, const std::vector<std::size_t>& dims,
      const std::vector<Activation>& activations, Rng& rng);
  explicit Mlp(std::vector<DenseLayer> layers);

  // `depth` layers of width `hidden` ending in `out`; hidden layers use `hidden_act`.
  static Mlp make(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
                  std::size_t depth, Activation hidden_act, Activation out_act, Rng& rng);

  Var forward(Tape& tape, Var x);
  // Same arithmetic as forward() without recording a tape.
  Matrix evaluate(const Matrix& x) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }

 private:
  void check_chain() const;
  std::vector<DenseLayer> layers_;
};

Var mlp_forward(Mlp& params, Tape& tape, Var input);

}  // namespace sea::ad
