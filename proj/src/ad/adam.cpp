#include "sea/ad/adam.hpp"

#include <cmath>

namespace sea::ad {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.push_back(Matrix::zeros_like(p->value));
    v_.push_back(Matrix::zeros_like(p->value));
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter& p = *params_[i];
    if (!p.grad.same_shape(p.value)) {
      throw Error("adam_step: gradient " + p.grad.shape_string() + " does not mirror parameter '" +
                  p.name + "' " + p.value.shape_string());
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mh = m[j] / c1;
      const double vh = v[j] / c2;
      w[j] -= config_.learning_rate * mh / (std::sqrt(vh) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::restore(std::uint64_t steps, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw Error("adam restore: expected " + std::to_string(params_.size()) + " accumulators");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!m[i].same_shape(params_[i]->value) || !v[i].same_shape(params_[i]->value)) {
      throw Error("adam restore: accumulator shape mismatch for '" + params_[i]->name + "'");
    }
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.values()) g *= s;
  }
  return norm;
}

}  // namespace sea::ad
