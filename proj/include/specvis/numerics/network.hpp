#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/numerics/layers.hpp"

namespace specvis::nn {

template <std::floating_point T>
using Layer = std::variant<Linear<T>, BatchNorm<T>, LeakyRelu<T>, Dropout<T>>;

/// A feed-forward stack of layers with reverse-mode differentiation.
///
/// Two lifecycle flags matter beyond the layers themselves:
/// - trimmed: the output layer was removed and the rest frozen (an encoder).
/// - pinned: forward always runs in inference mode regardless of the caller.
template <std::floating_point T>
class Network {
 public:
  Network() = default;

  Network& add(Layer<T> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }

  std::vector<Layer<T>>& layers() { return layers_; }
  const std::vector<Layer<T>>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }

  std::size_t input_dim() const { return edge_dim(/*first=*/true); }
  std::size_t output_dim() const { return edge_dim(/*first=*/false); }

  /// Runs layers [0, end) and caches activations for backward.
  Matrix<T> forward(const Matrix<T>& x, Mode mode) { return forward_prefix(x, mode, layers_.size()); }

  Matrix<T> forward_prefix(const Matrix<T>& x, Mode mode, std::size_t end) {
    if (layers_.empty()) throw StateError("network has no layers");
    if (x.cols() != input_dim()) {
      throw ConfigError("network expects " + std::to_string(input_dim()) + " input features, got " +
                        std::to_string(x.cols()));
    }
    const Mode effective = pinned_ ? Mode::inference : mode;
    Matrix<T> h = x;
    for (std::size_t i = 0; i < end; ++i)
      h = std::visit([&](auto& layer) { return layer.forward(h, effective); }, layers_[i]);
    forward_depth_ = end;
    return h;
  }

  /// Propagates dL/d(output) back through the layers touched by the last
  /// forward; fills parameter gradients of non-frozen layers and returns
  /// dL/d(input).
  Matrix<T> backward(const Matrix<T>& grad_output) {
    if (forward_depth_ == 0) throw StateError("backward called before forward");
    Matrix<T> g = grad_output;
    for (std::size_t i = forward_depth_; i-- > 0;)
      g = std::visit([&](auto& layer) { return layer.backward(g); }, layers_[i]);
    return g;
  }

  std::vector<ParamRef<T>> parameters() {
    std::vector<ParamRef<T>> out;
    for (auto& layer : layers_)
      std::visit([&](auto& l) { l.for_each_param([&](ParamRef<T> p) { out.push_back(p); }); }, layer);
    return out;
  }

  /// Every persisted array (parameters and running statistics) in
  /// declaration order.
  std::vector<std::span<T>> arrays() {
    std::vector<std::span<T>> out;
    for (auto& layer : layers_)
      std::visit([&](auto& l) { l.for_each_array([&](std::span<T> a) { out.push_back(a); }); }, layer);
    return out;
  }

  std::vector<std::span<const T>> arrays() const {
    auto spans = const_cast<Network*>(this)->arrays();
    return {spans.begin(), spans.end()};
  }

  void set_frozen(bool frozen) {
    for (auto& layer : layers_) std::visit([&](auto& l) { l.frozen = frozen; }, layer);
  }
  bool frozen() const {
    if (layers_.empty()) return false;
    for (const auto& layer : layers_)
      if (!std::visit([](const auto& l) { return l.frozen; }, layer)) return false;
    return true;
  }

  void pin_inference(bool pinned) { pinned_ = pinned; }
  bool inference_pinned() const { return pinned_; }

  bool trimmed() const { return trimmed_; }
  void mark_trimmed() { trimmed_ = true; }

  /// A network is ready once trained or loaded; saliency and trimming
  /// require it.
  bool ready() const { return ready_; }
  void mark_ready(bool ready = true) { ready_ = ready; }

  std::vector<Rng> dropout_states() const {
    std::vector<Rng> out;
    for (const auto& layer : layers_)
      if (const auto* d = std::get_if<Dropout<T>>(&layer)) out.push_back(d->rng());
    return out;
  }
  void restore_dropout_states(const std::vector<Rng>& states) {
    std::size_t k = 0;
    for (auto& layer : layers_)
      if (auto* d = std::get_if<Dropout<T>>(&layer)) d->rng() = states.at(k++);
  }

 private:
  std::size_t edge_dim(bool first) const {
    if (first) {
      for (const auto& layer : layers_)
        if (const auto* l = std::get_if<Linear<T>>(&layer)) return l->in_features();
    } else {
      for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        if (const auto* l = std::get_if<Linear<T>>(&*it)) return l->out_features();
    }
    throw StateError("network has no linear layer");
  }

  std::vector<Layer<T>> layers_;
  std::size_t forward_depth_ = 0;
  bool pinned_ = false;
  bool trimmed_ = false;
  bool ready_ = false;
};

}  // namespace specvis::nn
