#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "specvis/core/error.hpp"
#include "specvis/datasets/dataset.hpp"
#include "specvis/models/fusion.hpp"
#include "specvis/models/training.hpp"

namespace specvis::models {

enum class ModelKind { spectral, image, multimodal };

inline std::string_view name_of(ModelKind k) {
  switch (k) {
    case ModelKind::spectral: return "spectral";
    case ModelKind::image: return "image";
    case ModelKind::multimodal: return "multimodal";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "spectral") return ModelKind::spectral;
  if (s == "image") return ModelKind::image;
  if (s == "multimodal") return ModelKind::multimodal;
  throw ConfigError("unknown model kind '" + std::string(s) + "' (spectral|image|multimodal)");
}

/// Everything needed to train one classifier of any kind.
struct RunHyper {
  LayerHyper layer{};
  TrainConfig unimodal{50, 128, {}, 0};
  TrainConfig fusion{10, 128, {}, 0};
  bool standardize_spectra = false;
  data::PairingMode pairing = data::PairingMode::by_index;
};

/// A trained classifier of one kind. Unused members stay empty.
template <std::floating_point T>
struct Classifier {
  ModelKind kind = ModelKind::spectral;
  std::size_t classes = 0;
  nn::Network<T> spectral;  // full unimodal net (spectral and multimodal kinds)
  nn::Network<T> image;     // full unimodal net (image and multimodal kinds)
  std::optional<FusionModel<T>> fusion;
  data::Standardizer<T> spectral_standardizer;

  Prediction<T> predict(data::FeatureSet<T> features) const {
    spectral_standardizer.apply(features.spectral);
    switch (kind) {
      case ModelKind::spectral: return models::predict(spectral, features.spectral);
      case ModelKind::image: return models::predict(image, features.image);
      case ModelKind::multimodal: return fusion->predict(features.spectral, features.image);
    }
    throw StateError("unknown model kind");
  }
};

/// Trains the requested kind. The multimodal kind first trains both
/// unimodal networks, trims them, then trains the fusion head. Sub-run seeds
/// are derived from `seed` so each stage has its own stream.
template <std::floating_point T>
Classifier<T> train_classifier(ModelKind kind, data::FeatureSet<T> features, std::size_t classes,
                               const RunHyper& hyper, std::uint64_t seed) {
  if (features.size() == 0) throw ConfigError("no training samples");
  Classifier<T> c;
  c.kind = kind;
  c.classes = classes;
  if (hyper.standardize_spectra) {
    c.spectral_standardizer = data::Standardizer<T>::fit(features.spectral);
    c.spectral_standardizer.apply(features.spectral);
  }
  auto stage = [&](TrainConfig cfg, std::string_view tag) {
    cfg.seed = derive_seed(seed, tag);
    return cfg;
  };
  if (kind != ModelKind::image) {
    c.spectral = train_unimodal<T>(spectral_net_spec(classes), hyper.layer, features.spectral, features.labels,
                                   stage(hyper.unimodal, "spectral"))
                     .network;
  }
  if (kind != ModelKind::spectral) {
    c.image = train_unimodal<T>(image_net_spec(features.image.cols(), classes), hyper.layer, features.image,
                                features.labels, stage(hyper.unimodal, "image"))
                  .network;
  }
  if (kind == ModelKind::multimodal) {
    c.fusion = train_fusion<T>(trim(c.spectral), trim(c.image), features.spectral, features.image, features.labels,
                               classes, hyper.layer, stage(hyper.fusion, "fusion"))
                   .first;
  }
  return c;
}

}  // namespace specvis::models
