#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specvis/core/random.hpp"
#include "specvis/datasets/spectral.hpp"
#include "specvis/numerics/network.hpp"

namespace specvis::models {

/// Linear -> [BatchNorm] -> LeakyReLU -> [Dropout]
struct HiddenBlock {
  std::size_t width = 0;
  double dropout = 0.0;
  bool batch_norm = true;
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<HiddenBlock> hidden;
  std::size_t outputs = 8;
};

/// Hyperparameters shared by every hidden block; recorded in model files.
struct LayerHyper {
  double leaky_relu_slope = 0.01;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
};

/// 662 -> 64 -> 64 -> 32 -> 32 -> classes; dropout 0.25 after all but the
/// last hidden block.
inline NetworkSpec spectral_net_spec(std::size_t classes = 8) {
  return {data::kSpectralFeatures, {{64, 0.25}, {64, 0.25}, {32, 0.25}, {32, 0.0}}, classes};
}

/// embedding -> 128 -> 64 -> 32 -> classes; dropout 0.1 after the first two
/// hidden blocks.
inline NetworkSpec image_net_spec(std::size_t embedding_dim = 1920, std::size_t classes = 8) {
  return {embedding_dim, {{128, 0.1}, {64, 0.1}, {32, 0.0}}, classes};
}

/// Input width of the fusion head: two 32-wide encoder outputs.
inline constexpr std::size_t kEncoderWidth = 32;

/// concat(32, 32) -> 32 with leaky ReLU -> classes. No batch norm, no dropout.
inline NetworkSpec fusion_head_spec(std::size_t classes = 8) {
  return {2 * kEncoderWidth, {{32, 0.0, false}}, classes};
}

/// Weights + biases of every linear layer.
inline std::size_t linear_parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0, in = spec.input_dim;
  for (const auto& h : spec.hidden) {
    total += in * h.width + h.width;
    in = h.width;
  }
  return total + in * spec.outputs + spec.outputs;
}

/// Trainable gamma + beta of every batch-norm layer.
inline std::size_t batchnorm_parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& h : spec.hidden)
    if (h.batch_norm) total += 2 * h.width;
  return total;
}

/// Builds and initializes a network. Linear weights are drawn uniformly in
/// +-sqrt(6 / ((1 + slope^2) * fan_in)) (He-uniform for leaky ReLU), biases
/// are zero, gamma = 1 and beta = 0. Dropout streams are derived from `seed`.
template <std::floating_point T>
nn::Network<T> build_network(const NetworkSpec& spec, const LayerHyper& hyper, std::uint64_t seed) {
  nn::Network<T> net;
  Rng init(derive_seed(seed, "init"));
  auto make_linear = [&](std::size_t in, std::size_t out) {
    nn::Linear<T> l(in, out);
    const double bound =
        std::sqrt(6.0 / ((1.0 + hyper.leaky_relu_slope * hyper.leaky_relu_slope) * static_cast<double>(in)));
    for (T& w : l.weights().data()) w = static_cast<T>(uniform(init, -bound, bound));
    return l;
  };
  std::size_t in = spec.input_dim;
  std::uint64_t dropout_index = 0;
  for (const auto& h : spec.hidden) {
    net.add(make_linear(in, h.width));
    if (h.batch_norm) net.add(nn::BatchNorm<T>(h.width, hyper.bn_momentum, hyper.bn_epsilon));
    net.add(nn::LeakyRelu<T>(hyper.leaky_relu_slope));
    if (h.dropout > 0.0) net.add(nn::Dropout<T>(h.dropout, derive_seed(seed, "dropout", dropout_index++)));
    in = h.width;
  }
  net.add(make_linear(in, spec.outputs));
  return net;
}

}  // namespace specvis::models
