#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/random.hpp"
#include "specvis/models/specs.hpp"
#include "specvis/numerics/adam.hpp"
#include "specvis/numerics/loss.hpp"
#include "specvis/numerics/network.hpp"

namespace specvis::models {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Shuffled mini-batches for one epoch. A trailing batch of a single row is
/// merged into the one before it so batch norm always sees >= 2 rows.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t rows, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = i;
  shuffle<std::size_t>(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < rows; start += batch_size) {
    const std::size_t end = std::min(rows, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

/// Mini-batch Adam on softmax cross-entropy. Deterministic given config.seed.
template <std::floating_point T>
TrainResult train_network(nn::Network<T>& net, const nn::Matrix<T>& x, std::span<const int> labels,
                          const TrainConfig& config) {
  if (x.rows() == 0) throw ConfigError("training data is empty");
  if (x.rows() != labels.size()) throw ConfigError("feature rows and labels differ in count");
  if (config.epochs == 0) throw ConfigError("epochs must be positive");
  const int classes = static_cast<int>(net.output_dim());
  for (int y : labels)
    if (y < 0 || y >= classes) throw DataError("label " + std::to_string(y) + " out of range");

  nn::Adam<T> adam(config.adam);
  Rng order_rng(derive_seed(config.seed, "batches"));
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double weighted = 0.0;
    for (const auto& batch : make_batches(x.rows(), config.batch_size, order_rng)) {
      const auto xb = x.gather_rows(batch);
      std::vector<int> yb(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) yb[i] = labels[batch[i]];
      const auto logits = net.forward(xb, nn::Mode::training);
      auto loss = nn::softmax_cross_entropy<T>(logits, yb);
      if (!std::isfinite(loss.loss)) throw NumericalError("training loss became non-finite");
      net.backward(loss.grad_logits);
      const auto params = net.parameters();
      adam.step(params);
      weighted += loss.loss * static_cast<double>(batch.size());
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(x.rows()));
  }
  for (auto a : net.arrays())
    for (T v : a)
      if (!std::isfinite(v)) throw NumericalError("parameters became non-finite");
  net.mark_ready();
  return result;
}

template <std::floating_point T>
struct TrainedNetwork {
  nn::Network<T> network;
  TrainResult history;
};

template <std::floating_point T>
TrainedNetwork<T> train_unimodal(const NetworkSpec& spec, const LayerHyper& hyper, const nn::Matrix<T>& x,
                                 std::span<const int> labels, const TrainConfig& config) {
  auto net = build_network<T>(spec, hyper, config.seed);
  auto history = train_network(net, x, labels, config);
  return {std::move(net), std::move(history)};
}

/// Drops the output layer of a trained network and freezes the rest, which
/// then always runs in inference mode.
template <std::floating_point T>
nn::Network<T> trim(nn::Network<T> net) {
  if (net.trimmed()) throw StateError("network is already trimmed");
  if (!net.ready()) throw StateError("cannot trim an untrained network");
  if (net.layers().empty() || !std::holds_alternative<nn::Linear<T>>(net.layers().back()))
    throw StateError("network does not end in a linear output layer");
  net.layers().pop_back();
  net.set_frozen(true);
  net.pin_inference(true);
  net.mark_trimmed();
  return net;
}

template <std::floating_point T>
struct Prediction {
  nn::Matrix<T> probabilities;
  std::vector<int> labels;
};

template <std::floating_point T>
Prediction<T> predictions_from_logits(const nn::Matrix<T>& logits) {
  Prediction<T> p{nn::softmax(logits), {}};
  p.labels.reserve(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) p.labels.push_back(nn::argmax<T>(p.probabilities.row(r)));
  return p;
}

/// Inference-mode class probabilities and argmax labels (lowest index wins
/// ties). Works on a copy so the caller's network is untouched.
template <std::floating_point T>
Prediction<T> predict(const nn::Network<T>& net, const nn::Matrix<T>& x) {
  auto copy = net;
  return predictions_from_logits(copy.forward(x, nn::Mode::inference));
}

}  // namespace specvis::models
