#pragma once

#include <cstdint>
#include <vector>

#include "sea/ad/tape.hpp"

namespace sea::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators for a fixed list of parameters.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig config);

  // Applies one bias-corrected update from each parameter's current gradient.
  void step();
  void zero_grad();

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t step_count() const { return steps_; }
  const std::vector<Parameter*>& params() const { return params_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  // Restores saved accumulators; shapes must mirror the parameters.
  void restore(std::uint64_t steps, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t steps_ = 0;
  AdamConfig config_;
};

// Rescales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before rescaling.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace sea::ad
