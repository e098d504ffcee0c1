#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "specvis/core/binary.hpp"
#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/numerics/network.hpp"

namespace specvis::nn {

// Model files come in pairs: `<stem>.model` is a key/value manifest
// describing the layer stack and hyperparameters; `<stem>.params` holds every
// array from Network::arrays() as little-endian float32, concatenated in
// declaration order.

inline constexpr std::string_view kModelFormat = "specvis-model/1";

template <std::floating_point T>
constexpr std::string_view precision_name() {
  return std::is_same_v<T, float> ? "float32" : "float64";
}

/// Appends the network description (layers, flags, array count) to `kv`.
template <std::floating_point T>
void describe_network(const Network<T>& net, KeyValueFile& kv, std::string_view prefix = "") {
  const std::string p(prefix);
  kv.set(p + "trimmed", net.trimmed() ? "1" : "0");
  kv.set(p + "frozen", net.frozen() ? "1" : "0");
  kv.set(p + "inference_pinned", net.inference_pinned() ? "1" : "0");
  kv.set(p + "layers", std::to_string(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    std::string desc = std::visit(
        [](const auto& l) -> std::string {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Linear<T>>) {
            return "linear " + std::to_string(l.in_features()) + " " + std::to_string(l.out_features());
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            return "batchnorm " + std::to_string(l.features()) + " " + format_number(l.momentum()) + " " +
                   format_number(l.epsilon());
          } else if constexpr (std::is_same_v<L, LeakyRelu<T>>) {
            return "leaky_relu " + format_number(l.negative_slope());
          } else {
            return "dropout " + format_number(l.rate());
          }
        },
        net.layers()[i]);
    kv.set(p + "layer." + std::to_string(i), desc);
  }
}

template <std::floating_point T>
Network<T> network_from_description(const KeyValueFile& kv, std::string_view prefix = "") {
  const std::string p(prefix);
  Network<T> net;
  const auto count = kv.require_number<std::size_t>(p + "layers");
  for (std::size_t i = 0; i < count; ++i) {
    const auto fields = split(kv.require(p + "layer." + std::to_string(i)), ' ');
    const auto& kind = fields.at(0);
    auto need = [&](std::size_t n) {
      if (fields.size() != n) throw DataError("malformed layer description for layer " + std::to_string(i));
    };
    if (kind == "linear") {
      need(3);
      net.add(Linear<T>(parse_number<std::size_t>(fields[1], "in"), parse_number<std::size_t>(fields[2], "out")));
    } else if (kind == "batchnorm") {
      need(4);
      net.add(BatchNorm<T>(parse_number<std::size_t>(fields[1], "features"),
                           parse_number<double>(fields[2], "momentum"), parse_number<double>(fields[3], "epsilon")));
    } else if (kind == "leaky_relu") {
      need(2);
      net.add(LeakyRelu<T>(parse_number<double>(fields[1], "slope")));
    } else if (kind == "dropout") {
      need(2);
      net.add(Dropout<T>(parse_number<double>(fields[1], "rate")));
    } else {
      throw DataError("unknown layer kind '" + kind + "'");
    }
  }
  net.set_frozen(kv.require(p + "frozen") == "1");
  net.pin_inference(kv.require(p + "inference_pinned") == "1");
  if (kv.require(p + "trimmed") == "1") net.mark_trimmed();
  return net;
}

template <std::floating_point T>
std::vector<char> encode_arrays(const Network<T>& net) {
  std::vector<char> bytes;
  for (auto a : net.arrays())
    for (T v : a) append_f32_le(bytes, static_cast<float>(v));
  return bytes;
}

template <std::floating_point T>
void decode_arrays(Network<T>& net, std::span<const char> bytes) {
  std::size_t expected = 0;
  for (auto a : net.arrays()) expected += a.size();
  if (bytes.size() != expected * 4) {
    throw DataError("parameter file holds " + std::to_string(bytes.size() / 4) + " values, architecture needs " +
                    std::to_string(expected));
  }
  std::size_t offset = 0;
  for (auto a : net.arrays())
    for (T& v : a) {
      v = static_cast<T>(read_f32_le(bytes.data() + offset));
      offset += 4;
    }
}

inline std::filesystem::path params_path_for(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension(".params");
  return p;
}

/// Writes `<stem>.model` and `<stem>.params`. `extra` keys (hyperparameters,
/// seeds, hashes) are appended to the manifest verbatim.
template <std::floating_point T>
void save_network(const Network<T>& net, const std::filesystem::path& model_path,
                  const KeyValueFile& extra = {}) {
  KeyValueFile kv;
  kv.set("format", std::string(kModelFormat));
  kv.set("precision", std::string(precision_name<T>()));
  describe_network(net, kv);
  const auto params = params_path_for(model_path);
  kv.set("params_file", params.filename().string());
  const auto bytes = encode_arrays(net);
  kv.set("params_count", std::to_string(bytes.size() / 4));
  for (const auto& [k, v] : extra.entries()) kv.set(k, v);
  write_bytes(params, bytes);
  kv.write(model_path);
}

template <std::floating_point T>
Network<T> load_network(const std::filesystem::path& model_path, KeyValueFile* manifest_out = nullptr) {
  const auto kv = KeyValueFile::read(model_path);
  if (kv.require("format") != kModelFormat) throw DataError(model_path.string() + ": not a network model file");
  auto net = network_from_description<T>(kv);
  const auto params = model_path.parent_path() / kv.require("params_file");
  decode_arrays(net, read_bytes(params));
  net.mark_ready();
  if (manifest_out) *manifest_out = kv;
  return net;
}

}  // namespace specvis::nn
