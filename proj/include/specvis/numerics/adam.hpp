#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/numerics/layers.hpp"

namespace specvis::nn {

struct AdamConfig {
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   w <- w - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Moments are allocated on the first step and pinned to those shapes.
/// Frozen parameters are skipped entirely.
template <std::floating_point T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {
    if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0) || config.beta1 < 0.0 ||
        config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
      throw ConfigError("invalid Adam hyperparameters");
    }
  }

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

  void step(std::span<const ParamRef<T>> params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value.size(), T{0});
        v_.emplace_back(p.value.size(), T{0});
      }
    }
    if (params.size() != m_.size()) throw ConfigError("adam: parameter list changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].value.size() != m_[i].size() || params[i].grad.size() != m_[i].size()) {
        throw ConfigError("adam: shape mismatch for parameter '" + std::string(params[i].name) + "'");
      }
    }

    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T lr = static_cast<T>(config_.learning_rate);
    const T eps = static_cast<T>(config_.epsilon);
    const T c1 = static_cast<T>(correction1);
    const T c2 = static_cast<T>(correction2);

    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      if (p.frozen) continue;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < m.size(); ++j) {
        const T g = p.grad[j];
        m[j] = b1 * m[j] + (T{1} - b1) * g;
        v[j] = b2 * v[j] + (T{1} - b2) * g * g;
        const T m_hat = m[j] / c1;
        const T v_hat = v[j] / c2;
        p.value[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

}  // namespace specvis::nn
