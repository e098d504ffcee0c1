#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"

namespace specvis::eval {

/// Predicted labels for every test sample of one object.
struct ObjectOutcome {
  std::string object_id;
  int truth = 0;
  std::vector<int> predicted;
};

/// Sample-level accounting for one (protocol, model kind, seed) run.
struct EvaluationReport {
  std::string protocol;  // looo | heldout
  std::string model_kind;
  std::vector<std::string> classes;  // label index -> material name
  std::uint64_t seed = 0;
  std::string dataset_hash;
  std::string config_hash;
  std::vector<ObjectOutcome> outcomes;  // in dataset object order

  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<double> per_material_accuracy;        // NaN for classes with no test samples
  std::vector<std::size_t> per_material_samples;
  std::vector<double> per_object_accuracy;  // parallel to outcomes
  double overall_accuracy = 0.0;
  std::size_t total_samples = 0;

  /// Recomputes every derived field from `outcomes`.
  void finalize() {
    const std::size_t k = classes.size();
    confusion.assign(k, std::vector<std::size_t>(k, 0));
    per_object_accuracy.clear();
    total_samples = 0;
    std::size_t correct = 0;
    for (const auto& o : outcomes) {
      if (o.truth < 0 || static_cast<std::size_t>(o.truth) >= k) throw DataError("outcome label out of range");
      std::size_t hit = 0;
      for (int p : o.predicted) {
        if (p < 0 || static_cast<std::size_t>(p) >= k) throw DataError("predicted label out of range");
        ++confusion[static_cast<std::size_t>(o.truth)][static_cast<std::size_t>(p)];
        hit += (p == o.truth);
      }
      per_object_accuracy.push_back(o.predicted.empty() ? 0.0
                                                         : static_cast<double>(hit) /
                                                               static_cast<double>(o.predicted.size()));
      correct += hit;
      total_samples += o.predicted.size();
    }
    per_material_accuracy.assign(k, std::nan(""));
    per_material_samples.assign(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t row = std::accumulate(confusion[c].begin(), confusion[c].end(), std::size_t{0});
      per_material_samples[c] = row;
      if (row) per_material_accuracy[c] = static_cast<double>(confusion[c][c]) / static_cast<double>(row);
    }
    overall_accuracy = total_samples ? static_cast<double>(correct) / static_cast<double>(total_samples) : 0.0;
  }
};

inline std::map<std::string, double> per_material_breakdown(const EvaluationReport& r) {
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < r.classes.size(); ++c)
    if (r.per_material_samples[c]) out[r.classes[c]] = r.per_material_accuracy[c];
  return out;
}

inline std::map<std::string, double> per_object_breakdown(const EvaluationReport& r) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) out[r.outcomes[i].object_id] = r.per_object_accuracy[i];
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample standard deviation, skipping NaN entries.
inline MeanStd mean_std(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs)
    if (!std::isnan(x)) v.push_back(x);
  if (v.empty()) return {std::nan(""), std::nan("")};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

/// One report per seed plus mean/std of every accuracy field.
struct SeedAggregate {
  std::vector<EvaluationReport> reports;
  MeanStd overall;
  std::vector<MeanStd> per_material;
  std::vector<MeanStd> per_object;

  const EvaluationReport& first() const { return reports.at(0); }

  static SeedAggregate from_reports(std::vector<EvaluationReport> reports) {
    if (reports.empty()) throw ConfigError("aggregate needs at least one report");
    const auto& a = reports.front();
    for (const auto& r : reports) {
      if (r.protocol != a.protocol || r.classes != a.classes || r.dataset_hash != a.dataset_hash ||
          r.model_kind != a.model_kind || r.outcomes.size() != a.outcomes.size())
        throw ConfigError("reports disagree on protocol, model kind, class subset, or dataset");
    }
    SeedAggregate agg;
    agg.reports = std::move(reports);
    std::vector<double> overall;
    for (const auto& r : agg.reports) overall.push_back(r.overall_accuracy);
    agg.overall = mean_std(overall);
    for (std::size_t c = 0; c < a.classes.size(); ++c) {
      std::vector<double> xs;
      for (const auto& r : agg.reports) xs.push_back(r.per_material_accuracy[c]);
      agg.per_material.push_back(mean_std(xs));
    }
    for (std::size_t o = 0; o < agg.first().outcomes.size(); ++o) {
      std::vector<double> xs;
      for (const auto& r : agg.reports) xs.push_back(r.per_object_accuracy[o]);
      agg.per_object.push_back(mean_std(xs));
    }
    return agg;
  }
};

inline constexpr std::string_view kAggregateFormat = "specvis-aggregate/1";

namespace detail {
inline std::string num(double v) { return std::isnan(v) ? "nan" : format_number(v); }
inline double parse_num(const std::string& s) { return s == "nan" ? std::nan("") : parse_number<double>(s, "value"); }
}  // namespace detail

/// Machine-readable text: summary keys first, then every seed's confusion
/// matrix and per-object predictions.
inline KeyValueFile to_keyvalue(const SeedAggregate& agg) {
  const auto& a = agg.first();
  KeyValueFile kv;
  kv.add("format", std::string(kAggregateFormat));
  kv.add("protocol", a.protocol);
  kv.add("model_kind", a.model_kind);
  kv.add("classes", join(a.classes, ","));
  kv.add("dataset_hash", a.dataset_hash);
  kv.add("config_hash", a.config_hash);
  std::vector<std::string> seeds;
  for (const auto& r : agg.reports) seeds.push_back(std::to_string(r.seed));
  kv.add("seeds", join(seeds, ","));
  kv.add("overall.mean", detail::num(agg.overall.mean));
  kv.add("overall.std", detail::num(agg.overall.std));
  for (std::size_t c = 0; c < a.classes.size(); ++c)
    kv.add("material." + a.classes[c], detail::num(agg.per_material[c].mean) + " " + detail::num(agg.per_material[c].std));
  for (std::size_t o = 0; o < a.outcomes.size(); ++o)
    kv.add("object." + a.outcomes[o].object_id,
           a.classes[static_cast<std::size_t>(a.outcomes[o].truth)] + " " + detail::num(agg.per_object[o].mean) + " " +
               detail::num(agg.per_object[o].std));
  for (const auto& r : agg.reports) {
    const std::string p = "seed." + std::to_string(r.seed) + ".";
    kv.add(p + "overall", detail::num(r.overall_accuracy));
    kv.add(p + "config_hash", r.config_hash);
    std::vector<std::string> rows;
    for (const auto& row : r.confusion) {
      std::vector<std::string> cells;
      for (auto v : row) cells.push_back(std::to_string(v));
      rows.push_back(join(cells, ","));
    }
    kv.add(p + "confusion", join(rows, ";"));
    for (const auto& o : r.outcomes) {
      std::vector<std::string> preds;
      for (int v : o.predicted) preds.push_back(std::to_string(v));
      kv.add(p + "predictions", o.object_id + " " + std::to_string(o.truth) + " " + join(preds, ","));
    }
  }
  return kv;
}

inline SeedAggregate aggregate_from_keyvalue(const KeyValueFile& kv) {
  if (kv.require("format") != kAggregateFormat) throw DataError("not an aggregate report");
  std::vector<EvaluationReport> reports;
  for (const auto& s : split(kv.require("seeds"), ',')) {
    EvaluationReport r;
    r.protocol = kv.require("protocol");
    r.model_kind = kv.require("model_kind");
    r.classes = split(kv.require("classes"), ',');
    r.dataset_hash = kv.require("dataset_hash");
    r.seed = parse_number<std::uint64_t>(s, "seed");
    const std::string p = "seed." + s + ".";
    r.config_hash = kv.require(p + "config_hash");
    for (const auto& line : kv.all(p + "predictions")) {
      const auto f = split(line, ' ');
      if (f.size() != 3) throw DataError("malformed predictions line");
      ObjectOutcome o{f[0], parse_number<int>(f[1], "truth"), {}};
      for (const auto& v : split(f[2], ',')) o.predicted.push_back(parse_number<int>(v, "prediction"));
      r.outcomes.push_back(std::move(o));
    }
    r.finalize();
    reports.push_back(std::move(r));
  }
  return SeedAggregate::from_reports(std::move(reports));
}

inline void save_aggregate(const SeedAggregate& agg, const std::filesystem::path& path) {
  to_keyvalue(agg).write(path);
}

inline SeedAggregate load_aggregate(const std::filesystem::path& path) {
  return aggregate_from_keyvalue(KeyValueFile::read(path));
}

}  // namespace specvis::eval
