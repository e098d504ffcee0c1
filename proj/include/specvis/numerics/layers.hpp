#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/random.hpp"
#include "specvis/numerics/matrix.hpp"

namespace specvis::nn {

enum class Mode { training, inference };

/// A trainable tensor and its gradient, flat.
template <std::floating_point T>
struct ParamRef {
  std::string_view name;
  std::span<T> value;
  std::span<T> grad;
  bool frozen = false;
};

namespace detail {
inline void require_cols(std::size_t got, std::size_t want, std::string_view layer) {
  if (got != want) {
    throw ConfigError(std::string(layer) + ": expected " + std::to_string(want) +
                      " input features, got " + std::to_string(got));
  }
}
inline void require_cache(bool ok, std::string_view layer) {
  if (!ok) throw StateError(std::string(layer) + ": backward called before forward");
}
}  // namespace detail

/// Fully connected layer, y = W x + b with W stored out x in.
template <std::floating_point T>
class Linear {
 public:
  static constexpr std::string_view kind = "linear";

  Linear(std::size_t in, std::size_t out)
      : weights_(out, in), bias_(out), grad_weights_(out, in), grad_bias_(out) {}

  std::size_t in_features() const { return weights_.cols(); }
  std::size_t out_features() const { return weights_.rows(); }

  Matrix<T>& weights() { return weights_; }
  const Matrix<T>& weights() const { return weights_; }
  std::vector<T>& bias() { return bias_; }
  const std::vector<T>& bias() const { return bias_; }
  const Matrix<T>& grad_weights() const { return grad_weights_; }
  const std::vector<T>& grad_bias() const { return grad_bias_; }

  bool frozen = false;

  Matrix<T> forward(const Matrix<T>& x, Mode /*mode*/) {
    detail::require_cols(x.cols(), in_features(), kind);
    input_ = x;
    has_cache_ = true;
    // y[b] = bias + sum_i x[b][i] * W[:, i], accumulated row-wise over the
    // transposed weights in a fixed order, so each row is independent of the
    // rest of the batch.
    const std::size_t in = in_features(), out = out_features();
    transposed_.resize(in * out);
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t i = 0; i < in; ++i) transposed_[i * out + o] = weights_(o, i);
    Matrix<T> y(x.rows(), out);
    for (std::size_t b = 0; b < x.rows(); ++b) {
      const auto xr = x.row(b);
      auto yr = y.row(b);
      std::copy(bias_.begin(), bias_.end(), yr.begin());
      const T* wt = transposed_.data();
      std::size_t i = 0;
      for (; i + 4 <= in; i += 4)
        axpy4<T>(xr.data() + i, wt + i * out, wt + (i + 1) * out, wt + (i + 2) * out, wt + (i + 3) * out, yr.data(),
                 out);
      for (; i < in; ++i) axpy<T>(xr[i], std::span<const T>(wt + i * out, out), yr);
    }
    return y;
  }

  Matrix<T> backward(const Matrix<T>& grad_out) {
    detail::require_cache(has_cache_, kind);
    detail::require_cols(grad_out.cols(), out_features(), "linear backward");
    if (grad_out.rows() != input_.rows()) throw ConfigError("linear backward: batch size changed");
    if (!frozen) {
      // dW[o] = sum_b g[b][o] x[b], db[o] = sum_b g[b][o], summed over b in order.
      grad_weights_.fill(T{0});
      std::fill(grad_bias_.begin(), grad_bias_.end(), T{0});
      const std::size_t batch = grad_out.rows(), in = in_features();
      for (std::size_t o = 0; o < out_features(); ++o) {
        T* gw = grad_weights_.row(o).data();
        std::size_t b = 0;
        for (; b + 4 <= batch; b += 4) {
          const T a[4] = {grad_out(b, o), grad_out(b + 1, o), grad_out(b + 2, o), grad_out(b + 3, o)};
          axpy4<T>(a, input_.row(b).data(), input_.row(b + 1).data(), input_.row(b + 2).data(),
                   input_.row(b + 3).data(), gw, in);
        }
        for (; b < batch; ++b) axpy<T>(grad_out(b, o), input_.row(b), grad_weights_.row(o));
        for (b = 0; b < batch; ++b) grad_bias_[o] += grad_out(b, o);
      }
    }
    // dx[b] = sum_o g[b][o] W[o]
    Matrix<T> grad_in(grad_out.rows(), in_features());
    const std::size_t out = out_features(), in = in_features();
    for (std::size_t b = 0; b < grad_out.rows(); ++b) {
      const auto g = grad_out.row(b);
      T* gi = grad_in.row(b).data();
      std::size_t o = 0;
      for (; o + 4 <= out; o += 4)
        axpy4<T>(g.data() + o, weights_.row(o).data(), weights_.row(o + 1).data(), weights_.row(o + 2).data(),
                 weights_.row(o + 3).data(), gi, in);
      for (; o < out; ++o) axpy<T>(g[o], weights_.row(o), grad_in.row(b));
    }
    return grad_in;
  }

  template <typename F>
  void for_each_param(F&& f) {
    f(ParamRef<T>{"weights", weights_.data(), grad_weights_.data(), frozen});
    f(ParamRef<T>{"bias", bias_, grad_bias_, frozen});
  }

  /// Every persisted array, in declaration order.
  template <typename F>
  void for_each_array(F&& f) {
    f(weights_.data());
    f(std::span<T>(bias_));
  }

 private:
  Matrix<T> weights_;
  std::vector<T> bias_;
  Matrix<T> grad_weights_;
  std::vector<T> grad_bias_;
  Matrix<T> input_;
  std::vector<T> transposed_;
  bool has_cache_ = false;
};

/// Per-feature batch normalization with running statistics.
///
/// Training mode normalizes with the batch mean and biased batch variance and
/// blends the running statistics as `running = momentum * running + (1 -
/// momentum) * batch`, using the unbiased batch variance for running_var.
/// Inference mode normalizes with the running statistics only, so each row's
/// output depends on that row alone.
template <std::floating_point T>
class BatchNorm {
 public:
  static constexpr std::string_view kind = "batchnorm";

  explicit BatchNorm(std::size_t features, double momentum = 0.9, double epsilon = 1e-5)
      : momentum_(momentum),
        epsilon_(epsilon),
        gamma_(features, T{1}),
        beta_(features, T{0}),
        running_mean_(features, T{0}),
        running_var_(features, T{1}),
        grad_gamma_(features),
        grad_beta_(features) {
    if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batchnorm momentum must be in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("batchnorm epsilon must be positive");
  }

  std::size_t features() const { return gamma_.size(); }
  double momentum() const { return momentum_; }
  double epsilon() const { return epsilon_; }

  std::vector<T>& gamma() { return gamma_; }
  std::vector<T>& beta() { return beta_; }
  std::vector<T>& running_mean() { return running_mean_; }
  std::vector<T>& running_var() { return running_var_; }
  const std::vector<T>& gamma() const { return gamma_; }
  const std::vector<T>& beta() const { return beta_; }
  const std::vector<T>& running_mean() const { return running_mean_; }
  const std::vector<T>& running_var() const { return running_var_; }
  const std::vector<T>& grad_gamma() const { return grad_gamma_; }
  const std::vector<T>& grad_beta() const { return grad_beta_; }

  bool frozen = false;

  Matrix<T> forward(const Matrix<T>& x, Mode mode) {
    detail::require_cols(x.cols(), features(), kind);
    const std::size_t n = x.rows();
    const std::size_t f = features();
    inv_std_.assign(f, T{0});
    normalized_ = Matrix<T>(n, f);
    Matrix<T> y(n, f);
    cached_mode_ = mode;

    if (mode == Mode::training) {
      if (n < 2) throw ConfigError("batchnorm: training mode requires batch size >= 2");
      std::vector<T> mean(f, T{0}), var(f, T{0});
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j) mean[j] += x(b, j);
      for (std::size_t j = 0; j < f; ++j) mean[j] /= static_cast<T>(n);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j) {
          const T d = x(b, j) - mean[j];
          var[j] += d * d;
        }
      for (std::size_t j = 0; j < f; ++j) {
        var[j] /= static_cast<T>(n);
        inv_std_[j] = T{1} / std::sqrt(var[j] + static_cast<T>(epsilon_));
        const T unbiased = var[j] * static_cast<T>(n) / static_cast<T>(n - 1);
        const T m = static_cast<T>(momentum_);
        running_mean_[j] = m * running_mean_[j] + (T{1} - m) * mean[j];
        running_var_[j] = m * running_var_[j] + (T{1} - m) * unbiased;
      }
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j) {
          const T xh = (x(b, j) - mean[j]) * inv_std_[j];
          normalized_(b, j) = xh;
          y(b, j) = gamma_[j] * xh + beta_[j];
        }
    } else {
      for (std::size_t j = 0; j < f; ++j)
        inv_std_[j] = T{1} / std::sqrt(running_var_[j] + static_cast<T>(epsilon_));
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j) {
          const T xh = (x(b, j) - running_mean_[j]) * inv_std_[j];
          normalized_(b, j) = xh;
          y(b, j) = gamma_[j] * xh + beta_[j];
        }
    }
    has_cache_ = true;
    return y;
  }

  Matrix<T> backward(const Matrix<T>& grad_out) {
    detail::require_cache(has_cache_, kind);
    detail::require_cols(grad_out.cols(), features(), "batchnorm backward");
    const std::size_t n = grad_out.rows();
    const std::size_t f = features();
    if (n != normalized_.rows()) throw ConfigError("batchnorm backward: batch size changed");

    std::vector<T> sum_g(f, T{0}), sum_g_xh(f, T{0});
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t j = 0; j < f; ++j) {
        sum_g[j] += grad_out(b, j);
        sum_g_xh[j] += grad_out(b, j) * normalized_(b, j);
      }
    if (!frozen) {
      grad_gamma_ = sum_g_xh;
      grad_beta_ = sum_g;
    }

    Matrix<T> grad_in(n, f);
    if (cached_mode_ == Mode::training) {
      const T count = static_cast<T>(n);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j) {
          // d/dx of gamma * (x - mean) / std with batch statistics.
          const T g = grad_out(b, j) * gamma_[j];
          const T sg = sum_g[j] * gamma_[j];
          const T sgx = sum_g_xh[j] * gamma_[j];
          grad_in(b, j) = inv_std_[j] / count * (count * g - sg - normalized_(b, j) * sgx);
        }
    } else {
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t j = 0; j < f; ++j)
          grad_in(b, j) = grad_out(b, j) * gamma_[j] * inv_std_[j];
    }
    return grad_in;
  }

  template <typename F>
  void for_each_param(F&& f) {
    f(ParamRef<T>{"gamma", gamma_, grad_gamma_, frozen});
    f(ParamRef<T>{"beta", beta_, grad_beta_, frozen});
  }

  template <typename F>
  void for_each_array(F&& f) {
    f(std::span<T>(gamma_));
    f(std::span<T>(beta_));
    f(std::span<T>(running_mean_));
    f(std::span<T>(running_var_));
  }

 private:
  double momentum_;
  double epsilon_;
  std::vector<T> gamma_, beta_, running_mean_, running_var_;
  std::vector<T> grad_gamma_, grad_beta_;
  Matrix<T> normalized_;
  std::vector<T> inv_std_;
  Mode cached_mode_ = Mode::inference;
  bool has_cache_ = false;
};

template <std::floating_point T>
class LeakyRelu {
 public:
  static constexpr std::string_view kind = "leaky_relu";

  explicit LeakyRelu(double negative_slope = 0.01) : slope_(negative_slope) {
    if (!(negative_slope > 0.0)) throw ConfigError("leaky relu slope must be positive");
  }

  double negative_slope() const { return slope_; }
  bool frozen = false;

  Matrix<T> forward(const Matrix<T>& x, Mode /*mode*/) {
    input_ = x;
    has_cache_ = true;
    Matrix<T> y = x;
    const T s = static_cast<T>(slope_);
    for (T& v : y.data())
      if (v < T{0}) v *= s;
    return y;
  }

  Matrix<T> backward(const Matrix<T>& grad_out) {
    detail::require_cache(has_cache_, kind);
    if (grad_out.rows() != input_.rows() || grad_out.cols() != input_.cols())
      throw ConfigError("leaky relu backward: shape changed");
    Matrix<T> grad_in = grad_out;
    const T s = static_cast<T>(slope_);
    const auto in = input_.data();
    auto g = grad_in.data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] < T{0}) g[i] *= s;
    return grad_in;
  }

  template <typename F>
  void for_each_param(F&&) {}
  template <typename F>
  void for_each_array(F&&) {}

 private:
  double slope_;
  Matrix<T> input_;
  bool has_cache_ = false;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) during training so
/// inference is the identity.
template <std::floating_point T>
class Dropout {
 public:
  static constexpr std::string_view kind = "dropout";

  explicit Dropout(double rate, std::uint64_t seed = 0) : rate_(rate), rng_(seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
  }

  double rate() const { return rate_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  bool frozen = false;

  Matrix<T> forward(const Matrix<T>& x, Mode mode) {
    mask_ = Matrix<T>(x.rows(), x.cols(), T{1});
    has_cache_ = true;
    if (mode == Mode::inference || rate_ == 0.0) return x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    Matrix<T> y = x;
    auto m = mask_.data();
    auto out = y.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      m[i] = uniform01(rng_) < rate_ ? T{0} : keep_scale;
      out[i] *= m[i];
    }
    return y;
  }

  Matrix<T> backward(const Matrix<T>& grad_out) {
    detail::require_cache(has_cache_, kind);
    if (grad_out.rows() != mask_.rows() || grad_out.cols() != mask_.cols())
      throw ConfigError("dropout backward: shape changed");
    Matrix<T> grad_in = grad_out;
    const auto m = mask_.data();
    auto g = grad_in.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
    return grad_in;
  }

  template <typename F>
  void for_each_param(F&&) {}
  template <typename F>
  void for_each_array(F&&) {}

 private:
  double rate_;
  Rng rng_;
  Matrix<T> mask_;
  bool has_cache_ = false;
};

}  // namespace specvis::nn
