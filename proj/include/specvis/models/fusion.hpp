#pragma once

#include <cstdint>
#include <span>

#include "specvis/core/error.hpp"
#include "specvis/models/specs.hpp"
#include "specvis/models/training.hpp"

namespace specvis::models {

/// Late fusion: two frozen trimmed encoders whose 32-wide outputs are
/// concatenated and classified by a small trainable head.
template <std::floating_point T>
struct FusionModel {
  nn::Network<T> spectral_encoder;
  nn::Network<T> image_encoder;
  nn::Network<T> head;

  /// n x 64 concatenation of the encoder outputs.
  nn::Matrix<T> encode(const nn::Matrix<T>& spectral, const nn::Matrix<T>& image) const {
    if (spectral.rows() != image.rows()) throw ConfigError("fusion: modalities have different row counts");
    auto s = spectral_encoder;
    auto i = image_encoder;
    return nn::Matrix<T>::hconcat(s.forward(spectral, nn::Mode::inference), i.forward(image, nn::Mode::inference));
  }

  nn::Matrix<T> logits(const nn::Matrix<T>& spectral, const nn::Matrix<T>& image) const {
    auto h = head;
    return h.forward(encode(spectral, image), nn::Mode::inference);
  }

  Prediction<T> predict(const nn::Matrix<T>& spectral, const nn::Matrix<T>& image) const {
    return predictions_from_logits(logits(spectral, image));
  }
};

inline void require_encoder(bool trimmed, bool frozen, std::string_view which) {
  if (!trimmed || !frozen)
    throw StateError(std::string(which) + " encoder must be trimmed and frozen before fusion training");
}

/// Trains only the post-concatenation layers. Encoders run in inference
/// mode and their parameters are never touched.
template <std::floating_point T>
std::pair<FusionModel<T>, TrainResult> train_fusion(nn::Network<T> spectral_encoder, nn::Network<T> image_encoder,
                                                    const nn::Matrix<T>& spectral, const nn::Matrix<T>& image,
                                                    std::span<const int> labels, std::size_t classes,
                                                    const LayerHyper& hyper, const TrainConfig& config) {
  require_encoder(spectral_encoder.trimmed(), spectral_encoder.frozen(), "spectral");
  require_encoder(image_encoder.trimmed(), image_encoder.frozen(), "image");
  FusionModel<T> model{std::move(spectral_encoder), std::move(image_encoder), {}};
  const auto encoded = model.encode(spectral, image);
  model.head = build_network<T>(fusion_head_spec(classes), hyper, config.seed);
  auto history = train_network(model.head, encoded, labels, config);
  return {std::move(model), std::move(history)};
}

}  // namespace specvis::models
