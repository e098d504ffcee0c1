#pragma once

#include <filesystem>
#include <string>

#include "specvis/core/binary.hpp"
#include "specvis/core/hash.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/models/classifier.hpp"
#include "specvis/numerics/serialize.hpp"

namespace specvis::models {

// A saved classifier is a directory:
//
//   classifier.manifest   kind, classes, precision, seed, hashes
//   spectral.model/.params, image.model/.params   full unimodal networks
//   fusion.model/.params  fusion head; names both unimodal files and their
//                         content hashes, checked on load
//
// Encoders are rebuilt on load by trimming the unimodal networks.

inline constexpr std::string_view kClassifierFormat = "specvis-classifier/1";

/// Hash over a model manifest and its parameter file.
inline std::string model_content_hash(const std::filesystem::path& model_path) {
  Fnv1a h;
  const auto manifest = read_bytes(model_path);
  const auto params = read_bytes(nn::params_path_for(model_path));
  h.update(std::as_bytes(std::span(manifest.data(), manifest.size())));
  h.update(std::as_bytes(std::span(params.data(), params.size())));
  return h.hex();
}

inline KeyValueFile hyper_entries(const RunHyper& hyper) {
  KeyValueFile kv;
  kv.set("leaky_relu_slope", format_number(hyper.layer.leaky_relu_slope));
  kv.set("bn_momentum", format_number(hyper.layer.bn_momentum));
  kv.set("bn_epsilon", format_number(hyper.layer.bn_epsilon));
  kv.set("block_order", "linear,batchnorm,leaky_relu,dropout");
  kv.set("adam_learning_rate", format_number(hyper.unimodal.adam.learning_rate));
  kv.set("adam_beta1", format_number(hyper.unimodal.adam.beta1));
  kv.set("adam_beta2", format_number(hyper.unimodal.adam.beta2));
  kv.set("adam_epsilon", format_number(hyper.unimodal.adam.epsilon));
  kv.set("batch_size", std::to_string(hyper.unimodal.batch_size));
  kv.set("epochs_unimodal", std::to_string(hyper.unimodal.epochs));
  kv.set("epochs_fusion", std::to_string(hyper.fusion.epochs));
  return kv;
}

template <std::floating_point T>
void save_classifier(const Classifier<T>& c, const std::filesystem::path& dir, const RunHyper& hyper,
                     std::uint64_t seed, const KeyValueFile& extra = {}) {
  std::filesystem::create_directories(dir);
  auto common = hyper_entries(hyper);
  common.set("seed", std::to_string(seed));
  for (const auto& [k, v] : extra.entries()) common.set(k, v);

  KeyValueFile top = common;
  top.set("format", std::string(kClassifierFormat));
  top.set("kind", std::string(name_of(c.kind)));
  top.set("precision", std::string(nn::precision_name<T>()));
  top.set("classes", std::to_string(c.classes));

  if (c.kind != ModelKind::image) {
    KeyValueFile kv = common;
    kv.set("role", "spectral");
    if (!c.spectral_standardizer.empty()) {
      std::vector<std::string> mean, scale;
      for (T v : c.spectral_standardizer.mean) mean.push_back(format_number(v));
      for (T v : c.spectral_standardizer.scale) scale.push_back(format_number(v));
      kv.set("standardizer.mean", join(mean, ","));
      kv.set("standardizer.scale", join(scale, ","));
    }
    nn::save_network(c.spectral, dir / "spectral.model", kv);
    top.set("spectral_file", "spectral.model");
  }
  if (c.kind != ModelKind::spectral) {
    KeyValueFile kv = common;
    kv.set("role", "image");
    nn::save_network(c.image, dir / "image.model", kv);
    top.set("image_file", "image.model");
  }
  if (c.kind == ModelKind::multimodal) {
    KeyValueFile kv = common;
    kv.set("role", "fusion_head");
    kv.set("spectral_encoder_file", "spectral.model");
    kv.set("spectral_encoder_hash", model_content_hash(dir / "spectral.model"));
    kv.set("image_encoder_file", "image.model");
    kv.set("image_encoder_hash", model_content_hash(dir / "image.model"));
    nn::save_network(c.fusion->head, dir / "fusion.model", kv);
    top.set("fusion_file", "fusion.model");
  }
  top.write(dir / "classifier.manifest");
}

inline KeyValueFile read_classifier_manifest(const std::filesystem::path& dir) {
  const auto kv = KeyValueFile::read(dir / "classifier.manifest");
  if (kv.require("format") != kClassifierFormat) throw DataError(dir.string() + ": not a classifier directory");
  return kv;
}

template <std::floating_point T>
Classifier<T> load_classifier(const std::filesystem::path& dir) {
  const auto top = read_classifier_manifest(dir);
  Classifier<T> c;
  c.kind = parse_model_kind(top.require("kind"));
  c.classes = top.require_number<std::size_t>("classes");
  if (c.kind != ModelKind::image) {
    KeyValueFile kv;
    c.spectral = nn::load_network<T>(dir / top.require("spectral_file"), &kv);
    if (const auto mean = kv.get("standardizer.mean")) {
      for (const auto& v : split(*mean, ',')) c.spectral_standardizer.mean.push_back(parse_number<T>(v, "mean"));
      for (const auto& v : split(kv.require("standardizer.scale"), ','))
        c.spectral_standardizer.scale.push_back(parse_number<T>(v, "scale"));
    }
  }
  if (c.kind != ModelKind::spectral) c.image = nn::load_network<T>(dir / top.require("image_file"));
  if (c.kind == ModelKind::multimodal) {
    KeyValueFile kv;
    auto head = nn::load_network<T>(dir / top.require("fusion_file"), &kv);
    for (const std::string role : {"spectral", "image"}) {
      const auto file = dir / kv.require(role + "_encoder_file");
      if (model_content_hash(file) != kv.require(role + "_encoder_hash"))
        throw DataError(file.string() + ": content hash does not match the fusion model");
    }
    c.fusion = FusionModel<T>{trim(c.spectral), trim(c.image), std::move(head)};
  }
  return c;
}

}  // namespace specvis::models
