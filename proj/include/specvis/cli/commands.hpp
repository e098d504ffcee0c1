#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specvis/cli/config.hpp"
#include "specvis/core/error.hpp"
#include "specvis/datasets/io.hpp"
#include "specvis/datasets/splits.hpp"
#include "specvis/evaluation/protocols.hpp"
#include "specvis/evaluation/render.hpp"
#include "specvis/evaluation/synthetic.hpp"
#include "specvis/models/model_io.hpp"
#include "specvis/saliency/saliency.hpp"

namespace specvis::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

namespace detail {

namespace fs = std::filesystem;

/// Runs `f.template operator()<T>()` with T chosen by the precision name.
template <typename F>
decltype(auto) with_precision(const std::string& precision, F&& f) {
  if (precision == "float64") return f.template operator()<double>();
  return f.template operator()<float>();
}

/// Flags shared by train/looo/heldout. Each maps onto a config key; values
/// given on the command line override the config file.
struct RunFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "Key/value config file");
    for (const auto& key : config_keys()) {
      std::string flag = "--" + key;
      for (char& ch : flag)
        if (ch == '_') ch = '-';
      cmd->add_option(flag, values[key], "Overrides config key '" + key + "'");
    }
  }

  RunConfig resolve(CLI::App* cmd) const {
    KeyValueFile kv;
    if (!config_file.empty()) {
      if (!fs::is_regular_file(config_file)) throw DataError("config file not found: " + config_file);
      try {
        kv = KeyValueFile::read(config_file);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
    for (const auto& key : config_keys()) {
      std::string flag = "--" + key;
      for (char& ch : flag)
        if (ch == '_') ch = '-';
      if (cmd->count(flag)) kv.set(key, values.at(key));
    }
    auto cfg = apply_keyvalue(RunConfig{}, kv);
    if (cfg.dataset.empty()) throw ConfigError("no dataset given (--dataset or config key 'dataset')");
    return cfg;
  }
};

/// Material subsets come from the user, so a bad name is a usage error.
inline std::set<data::Material> material_flag(const std::string& text) {
  try {
    return data::parse_material_set(text);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

inline data::Dataset load_for_run(const RunConfig& cfg) {
  const auto subset = material_flag(cfg.materials);
  auto ds = data::load_dataset(cfg.dataset);
  if (cfg.materials == "all") return ds;
  return data::filter_materials(ds, subset);
}

inline void archive_config(const RunConfig& cfg, const data::Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  auto kv = to_keyvalue(cfg);
  kv.set("config_hash", config_hash(cfg));
  kv.set("dataset_hash", ds.content_hash());
  kv.write(dir / "config.resolved");
}

inline std::string run_label(const RunConfig& cfg, const data::Dataset& ds) {
  return std::string(models::name_of(cfg.kind)) + "-" + std::to_string(ds.class_count()) + "mat";
}

inline void print_dataset_summary(const data::Dataset& ds, std::ostream& out) {
  std::map<std::string, std::size_t> per_material;
  std::size_t train = 0, heldout = 0;
  for (const auto& o : ds.objects()) {
    ++per_material[std::string(data::name_of(o.material))];
    (o.split == data::SplitTag::train ? train : heldout) += 1;
  }
  out << ds.objects().size() << " objects, " << per_material.size() << " materials, " << ds.total_samples()
      << " pairs\n";
  out << "extractor: " << ds.extractor_id() << " (dim " << ds.embedding_dim() << ")\n";
  out << "split: " << train << " train, " << heldout << " heldout\n";
  for (const auto& [m, n] : per_material) out << "  " << m << ": " << n << " objects\n";
  out << "dataset_hash: " << ds.content_hash() << "\n";
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  CLI::App app{"Multimodal material recognition from NIR spectra and texture embeddings", "specvis"};
  app.require_subcommand(1);

  // synth
  eval::SyntheticCorpusSpec synth;
  std::string synth_out, synth_signal = "both", synth_materials = "all";
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus in the canonical format");
  c_synth->add_option("--out", synth_out, "Output dataset directory")->required();
  c_synth->add_option("--objects-per-material", synth.objects_per_material);
  c_synth->add_option("--samples-per-object", synth.samples_per_object);
  c_synth->add_option("--separation", synth.separation);
  c_synth->add_option("--noise", synth.noise);
  c_synth->add_option("--object-spread", synth.object_spread);
  c_synth->add_option("--embedding-dim", synth.embedding_dim);
  c_synth->add_option("--heldout-per-material", synth.heldout_per_material);
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--signal", synth_signal, "both|spectral|image");
  c_synth->add_option("--materials", synth_materials, "Comma-separated subset or 'all'");

  // import / export / validate
  std::string imp_spectra, imp_meta, imp_emb, imp_out, imp_name = "dataset";
  auto* c_import = app.add_subcommand("import", "Import CSV spectra + embedding files into the canonical format");
  c_import->add_option("--spectra", imp_spectra, "CSV: object_id,material,331 reflectances")->required();
  c_import->add_option("--metadata", imp_meta, "CSV: object_id,material,split")->required();
  c_import->add_option("--embeddings", imp_emb, "Extractor embedding manifest")->required();
  c_import->add_option("--name", imp_name);
  c_import->add_option("--out", imp_out, "Output dataset directory")->required();

  std::string exp_dataset, exp_out;
  auto* c_export = app.add_subcommand("export", "Export a canonical dataset to the CSV import form");
  c_export->add_option("--dataset", exp_dataset)->required();
  c_export->add_option("--out", exp_out)->required();

  std::string val_dataset;
  auto* c_validate = app.add_subcommand("validate", "Validate a canonical dataset and print counts");
  c_validate->add_option("--dataset", val_dataset)->required();

  // train / looo / heldout
  detail::RunFlags train_flags, looo_flags, heldout_flags;
  auto* c_train = app.add_subcommand("train", "Train one classifier on the train split and save it");
  train_flags.attach(c_train);
  auto* c_looo = app.add_subcommand("looo", "Leave-one-object-out evaluation over the train split");
  looo_flags.attach(c_looo);
  auto* c_heldout = app.add_subcommand("heldout", "Train on the train split, evaluate on heldout objects");
  heldout_flags.attach(c_heldout);

  // saliency
  std::string sal_model, sal_dataset, sal_object, sal_target, sal_out;
  std::size_t sal_sample = 0;
  bool sal_normalize = false, sal_mean = false;
  auto* c_sal = app.add_subcommand("saliency", "Input-gradient saliency map for one measurement");
  c_sal->add_option("--model", sal_model, "Classifier directory written by 'train'")->required();
  c_sal->add_option("--dataset", sal_dataset)->required();
  c_sal->add_option("--object", sal_object)->required();
  c_sal->add_option("--sample", sal_sample);
  c_sal->add_option("--target", sal_target, "Class name or index; default is the predicted class");
  c_sal->add_flag("--normalize", sal_normalize, "Divide by the largest magnitude");
  c_sal->add_flag("--mean", sal_mean, "Average maps over every sample of the object (extension)");
  c_sal->add_option("--out", sal_out, "Output file (default stdout)");

  // report
  std::vector<std::string> rep_files;
  std::string rep_out;
  auto* c_report = app.add_subcommand("report", "Render aggregate files as tables and a heatmap");
  c_report->add_option("aggregates", rep_files, "Aggregate files from looo/heldout")->required();
  c_report->add_option("--out", rep_out, "Output file (default stdout)");

  std::vector<std::string> argv_store(args);
  std::reverse(argv_store.begin(), argv_store.end());
  try {
    app.parse(argv_store);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (c_synth->parsed()) {
      if (synth_signal == "both") synth.signal = eval::SyntheticSignal::both;
      else if (synth_signal == "spectral") synth.signal = eval::SyntheticSignal::spectral_only;
      else if (synth_signal == "image") synth.signal = eval::SyntheticSignal::image_only;
      else throw ConfigError("--signal must be both, spectral, or image");
      synth.materials = detail::material_flag(synth_materials);
      const auto ds = eval::generate_synthetic_corpus(synth);
      data::save_dataset(ds, synth_out);
      detail::print_dataset_summary(ds, out);
    } else if (c_import->parsed()) {
      const auto ds = data::import_csv(imp_spectra, imp_meta, imp_emb, imp_name);
      data::save_dataset(ds, imp_out);
      detail::print_dataset_summary(ds, out);
    } else if (c_export->parsed()) {
      data::export_csv(data::load_dataset(exp_dataset), exp_out);
    } else if (c_validate->parsed()) {
      detail::print_dataset_summary(data::load_dataset(val_dataset), out);
    } else if (c_train->parsed()) {
      const auto cfg = train_flags.resolve(c_train);
      const auto ds = detail::load_for_run(cfg);
      const fs::path dir = fs::path(cfg.output) / ("model-" + detail::run_label(cfg, ds));
      detail::with_precision(cfg.precision, [&]<typename T>() {
        const auto seed = cfg.seeds.front();
        const auto train = ds.indices_with_split(data::SplitTag::train);
        auto features = data::build_features<T>(ds, train, cfg.hyper.pairing, derive_seed(seed, "pairing"));
        const auto model = models::train_classifier<T>(cfg.kind, std::move(features), ds.class_count(), cfg.hyper, seed);
        KeyValueFile extra;
        extra.set("dataset_hash", ds.content_hash());
        extra.set("config_hash", config_hash(cfg));
        extra.set("class_names", join(eval::detail::class_names(ds), ","));
        extra.set("embedding_dim", std::to_string(ds.embedding_dim()));
        models::save_classifier(model, dir, cfg.hyper, seed, extra);
      });
      detail::archive_config(cfg, ds, dir);
      out << "saved " << models::name_of(cfg.kind) << " classifier to " << dir.string() << "\n";
    } else if (c_looo->parsed() || c_heldout->parsed()) {
      const bool looo = c_looo->parsed();
      const auto cfg = (looo ? looo_flags : heldout_flags).resolve(looo ? c_looo : c_heldout);
      const auto ds = detail::load_for_run(cfg);
      const std::string protocol = looo ? "looo" : "heldout";
      const auto label = detail::run_label(cfg, ds);
      const fs::path dir = cfg.output;
      detail::archive_config(cfg, ds, dir / (protocol + "-" + label));
      eval::ProtocolOptions opt;
      opt.seeds = cfg.seeds;
      opt.workers = cfg.workers;
      opt.checkpoint_dir = dir / "checkpoints" / label;
      opt.model_kind = std::string(models::name_of(cfg.kind));
      opt.config_hash = config_hash(cfg);
      const auto agg = detail::with_precision(cfg.precision, [&]<typename T>() {
        const auto trainer = eval::neural_trainer<T>(cfg.kind, cfg.hyper);
        return looo ? eval::run_looo(ds, trainer, opt) : eval::run_heldout(ds, trainer, opt);
      });
      const auto file = dir / (protocol + "-" + label + ".aggregate");
      eval::save_aggregate(agg, file);
      char line[160];
      std::snprintf(line, sizeof line, "%s %s: %.2f%% +- %.2f over %zu seed(s), %zu objects\n", protocol.c_str(),
                    label.c_str(), 100.0 * agg.overall.mean, 100.0 * agg.overall.std, agg.reports.size(),
                    agg.first().outcomes.size());
      out << line << "wrote " << file.string() << "\n";
    } else if (c_sal->parsed()) {
      const auto top = models::read_classifier_manifest(sal_model);
      auto ds = data::load_dataset(sal_dataset);
      std::set<data::Material> classes;
      for (const auto& n : split(top.require("class_names"), ',')) classes.insert(data::parse_material(n));
      if (classes.size() != ds.class_count()) ds = data::filter_materials(ds, classes);
      const auto idx = ds.find(sal_object);
      if (!idx) throw DataError("object '" + sal_object + "' not in dataset");
      const auto& obj = ds.objects()[*idx];
      if (sal_sample >= obj.sample_count()) throw ConfigError("--sample out of range for '" + sal_object + "'");
      std::optional<int> target;
      if (!sal_target.empty()) {
        if (std::isdigit(static_cast<unsigned char>(sal_target.front())))
          target = parse_number<int>(sal_target, "--target");
        else
          target = ds.label_of(data::parse_material(sal_target));
      }
      const auto map = detail::with_precision(top.require("precision"), [&]<typename T>() {
        const auto model = models::load_classifier<T>(sal_model);
        const std::size_t one[] = {*idx};
        const auto f = data::build_features<T>(ds, one);
        if (sal_mean) return saliency::mean_saliency<T>(model, f.spectral, f.image, target);
        return saliency::saliency<T>(model, f.spectral.row(sal_sample), f.image.row(sal_sample), target);
      });
      std::ostringstream text;
      text << "# model = " << sal_model << "\n# object = " << sal_object << "\n# sample = " << sal_sample << "\n";
      saliency::write_saliency(text, map, sal_normalize);
      if (sal_out.empty()) {
        out << text.str();
      } else {
        std::ofstream f(sal_out, std::ios::binary);
        if (!f) throw DataError("cannot write " + sal_out);
        f << text.str();
      }
    } else if (c_report->parsed()) {
      std::vector<eval::SeedAggregate> aggs;
      for (const auto& f : rep_files) aggs.push_back(eval::load_aggregate(f));
      std::ostringstream text;
      eval::render_accuracy_tables(text, aggs);
      eval::render_material_heatmap(text, aggs);
      eval::render_object_table(text, aggs);
      if (rep_out.empty()) {
        out << text.str();
      } else {
        std::ofstream f(rep_out, std::ios::binary);
        if (!f) throw DataError("cannot write " + rep_out);
        f << text.str();
      }
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const StateError& e) {
    err << "state error: " << e.what() << "\n";
    return kUsage;
  } catch (const eval::RunInterrupted& e) {
    err << "interrupted: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kDataError;
  }
  return kSuccess;
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}

}  // namespace specvis::cli
