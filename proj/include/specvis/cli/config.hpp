#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/hash.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/datasets/splits.hpp"
#include "specvis/models/classifier.hpp"

namespace specvis::cli {

/// Fully resolved settings of one run. Defaults are the published training
/// recipe: 50 unimodal epochs, 10 fusion epochs, batch 128, Adam with
/// lr 0.0005, beta1 0.9, beta2 0.999.
struct RunConfig {
  std::string dataset;
  models::ModelKind kind = models::ModelKind::multimodal;
  std::string materials = "all";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  models::RunHyper hyper{};
  std::string output = "out";
  std::string precision = "float32";
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
};

/// Every recognized config key, in archive order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",      "kind",          "materials",  "seeds",       "epochs_unimodal", "epochs_fusion",
      "batch_size",   "learning_rate", "beta1",      "beta2",       "adam_epsilon",    "leaky_relu_slope",
      "bn_momentum",  "bn_epsilon",    "pairing",    "standardize", "precision",       "output",
      "workers"};
  return keys;
}

inline std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_number<std::uint64_t>(part.substr(0, dash), "seed range");
      const auto hi = parse_number<std::uint64_t>(part.substr(dash + 1), "seed range");
      if (hi < lo) throw ConfigError("empty seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_number<std::uint64_t>(part, "seed"));
    }
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

inline KeyValueFile to_keyvalue(const RunConfig& c) {
  KeyValueFile kv;
  std::vector<std::string> seeds;
  for (auto s : c.seeds) seeds.push_back(std::to_string(s));
  kv.set("dataset", c.dataset);
  kv.set("kind", std::string(models::name_of(c.kind)));
  kv.set("materials", c.materials);
  kv.set("seeds", join(seeds, ","));
  kv.set("epochs_unimodal", std::to_string(c.hyper.unimodal.epochs));
  kv.set("epochs_fusion", std::to_string(c.hyper.fusion.epochs));
  kv.set("batch_size", std::to_string(c.hyper.unimodal.batch_size));
  kv.set("learning_rate", format_number(c.hyper.unimodal.adam.learning_rate));
  kv.set("beta1", format_number(c.hyper.unimodal.adam.beta1));
  kv.set("beta2", format_number(c.hyper.unimodal.adam.beta2));
  kv.set("adam_epsilon", format_number(c.hyper.unimodal.adam.epsilon));
  kv.set("leaky_relu_slope", format_number(c.hyper.layer.leaky_relu_slope));
  kv.set("bn_momentum", format_number(c.hyper.layer.bn_momentum));
  kv.set("bn_epsilon", format_number(c.hyper.layer.bn_epsilon));
  kv.set("pairing", c.hyper.pairing == data::PairingMode::by_index ? "index" : "shuffle");
  kv.set("standardize", c.hyper.standardize_spectra ? "1" : "0");
  kv.set("precision", c.precision);
  kv.set("output", c.output);
  kv.set("workers", std::to_string(c.workers));
  return kv;
}

/// Applies `kv` on top of `base`; unknown keys are rejected.
inline RunConfig apply_keyvalue(RunConfig c, const KeyValueFile& kv) {
  for (const auto& [key, value] : kv.entries()) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key '" + key + "'");
    auto num = [&]<typename N>() {
      try {
        return parse_number<N>(value, key);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    };
    auto& h = c.hyper;
    if (key == "dataset") c.dataset = value;
    else if (key == "kind") c.kind = models::parse_model_kind(value);
    else if (key == "materials") {
      try {
        data::parse_material_set(value);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
      c.materials = value;
    } else if (key == "seeds") c.seeds = parse_seeds(value);
    else if (key == "epochs_unimodal") h.unimodal.epochs = num.template operator()<std::size_t>();
    else if (key == "epochs_fusion") h.fusion.epochs = num.template operator()<std::size_t>();
    else if (key == "batch_size") h.unimodal.batch_size = h.fusion.batch_size = num.template operator()<std::size_t>();
    else if (key == "learning_rate") h.unimodal.adam.learning_rate = h.fusion.adam.learning_rate = num.template operator()<double>();
    else if (key == "beta1") h.unimodal.adam.beta1 = h.fusion.adam.beta1 = num.template operator()<double>();
    else if (key == "beta2") h.unimodal.adam.beta2 = h.fusion.adam.beta2 = num.template operator()<double>();
    else if (key == "adam_epsilon") h.unimodal.adam.epsilon = h.fusion.adam.epsilon = num.template operator()<double>();
    else if (key == "leaky_relu_slope") h.layer.leaky_relu_slope = num.template operator()<double>();
    else if (key == "bn_momentum") h.layer.bn_momentum = num.template operator()<double>();
    else if (key == "bn_epsilon") h.layer.bn_epsilon = num.template operator()<double>();
    else if (key == "pairing") {
      if (value == "index") h.pairing = data::PairingMode::by_index;
      else if (value == "shuffle") h.pairing = data::PairingMode::shuffled;
      else throw ConfigError("pairing must be 'index' or 'shuffle'");
    } else if (key == "standardize") {
      if (value != "0" && value != "1") throw ConfigError("standardize must be 0 or 1");
      h.standardize_spectra = value == "1";
    } else if (key == "precision") {
      if (value != "float32" && value != "float64") throw ConfigError("precision must be float32 or float64");
      c.precision = value;
    } else if (key == "output") c.output = value;
    else if (key == "workers") c.workers = std::max<std::size_t>(1, num.template operator()<std::size_t>());
  }
  if (c.hyper.unimodal.epochs == 0 || c.hyper.fusion.epochs == 0 || c.hyper.unimodal.batch_size == 0)
    throw ConfigError("epochs and batch size must be positive");
  return c;
}

/// Hash of every setting that can change a trained model. Paths, worker
/// count, and the seed list are excluded: seeds are tracked per result.
inline std::string config_hash(const RunConfig& c) {
  const auto kv = to_keyvalue(c);
  Fnv1a h;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "dataset" || k == "output" || k == "workers" || k == "seeds") continue;
    h.update(k).update("=").update(v).update("\n");
  }
  return h.hex();
}

}  // namespace specvis::cli
