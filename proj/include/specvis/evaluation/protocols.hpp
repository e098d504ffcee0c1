#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/core/random.hpp"
#include "specvis/datasets/splits.hpp"
#include "specvis/evaluation/report.hpp"
#include "specvis/models/classifier.hpp"

namespace specvis::eval {

/// Predicts a label for every sample of dataset object `object`.
using Predictor = std::function<std::vector<int>(const data::Dataset&, std::size_t object)>;

/// Trains on the listed objects; `seed` is the split's own seed.
using Trainer =
    std::function<Predictor(const data::Dataset&, std::span<const std::size_t> train_objects, std::uint64_t seed)>;

struct ProtocolOptions {
  std::vector<std::uint64_t> seeds{0};
  std::size_t workers = 1;
  /// Per-split results are written here and reused when the dataset and
  /// config hashes match.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Stop after computing this many new splits (0 = no limit). Completed
  /// splits stay checkpointed and a later call resumes from them.
  std::size_t max_new_splits = 0;
  std::string model_kind = "custom";
  std::string config_hash = "none";
};

/// Thrown when max_new_splits stops a run before every split is done.
class RunInterrupted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Task {
  std::uint64_t seed = 0;         // the run seed this task belongs to
  std::uint64_t task_seed = 0;    // derived seed handed to the trainer
  std::string tag;                // checkpoint name
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

using TaskResult = std::vector<std::vector<int>>;  // parallel to Task::test

inline std::filesystem::path checkpoint_file(const std::filesystem::path& dir, const Task& t) {
  return dir / ("seed-" + std::to_string(t.seed)) / (t.tag + ".ckpt");
}

inline std::optional<TaskResult> read_checkpoint(const std::filesystem::path& file, const Task& t,
                                                 const data::Dataset& ds, const std::string& dataset_hash,
                                                 const std::string& config_hash) {
  if (!std::filesystem::exists(file)) return std::nullopt;
  KeyValueFile kv;
  try {
    kv = KeyValueFile::read(file);
  } catch (const DataError&) {
    return std::nullopt;
  }
  if (kv.get("dataset_hash") != dataset_hash || kv.get("config_hash") != config_hash) return std::nullopt;
  const auto lines = kv.all("predictions");
  if (lines.size() != t.test.size()) return std::nullopt;
  TaskResult result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = split(lines[i], ' ');
    const auto& obj = ds.objects()[t.test[i]];
    if (f.size() != 2 || f[0] != obj.object_id) return std::nullopt;
    std::vector<int> preds;
    for (const auto& v : split(f[1], ',')) preds.push_back(parse_number<int>(v, "prediction"));
    if (preds.size() != obj.sample_count()) return std::nullopt;
    result.push_back(std::move(preds));
  }
  return result;
}

inline void write_checkpoint(const std::filesystem::path& file, const Task& t, const data::Dataset& ds,
                             const TaskResult& result, const std::string& dataset_hash,
                             const std::string& config_hash) {
  std::filesystem::create_directories(file.parent_path());
  KeyValueFile kv;
  kv.add("dataset_hash", dataset_hash);
  kv.add("config_hash", config_hash);
  kv.add("task_seed", std::to_string(t.task_seed));
  for (std::size_t i = 0; i < t.test.size(); ++i) {
    std::vector<std::string> preds;
    for (int v : result[i]) preds.push_back(std::to_string(v));
    kv.add("predictions", ds.objects()[t.test[i]].object_id + " " + join(preds, ","));
  }
  auto tmp = file;
  tmp += ".tmp";
  kv.write(tmp);
  std::filesystem::rename(tmp, file);
}

/// Runs every task on `workers` threads. Results land at their task's index,
/// so the outcome does not depend on scheduling.
inline std::vector<TaskResult> run_tasks(const data::Dataset& ds, const std::vector<Task>& tasks,
                                         const Trainer& trainer, const ProtocolOptions& opt,
                                         const std::string& dataset_hash) {
  std::vector<TaskResult> results(tasks.size());
  std::vector<char> done(tasks.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> computed{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const auto& t = tasks[i];
      try {
        std::optional<std::filesystem::path> ckpt;
        if (opt.checkpoint_dir) {
          ckpt = checkpoint_file(*opt.checkpoint_dir, t);
          if (auto cached = read_checkpoint(*ckpt, t, ds, dataset_hash, opt.config_hash)) {
            results[i] = std::move(*cached);
            done[i] = 1;
            continue;
          }
        }
        if (opt.max_new_splits && computed.fetch_add(1) >= opt.max_new_splits) continue;
        const auto predictor = trainer(ds, t.train, t.task_seed);
        TaskResult r;
        for (std::size_t obj : t.test) {
          auto preds = predictor(ds, obj);
          if (preds.size() != ds.objects()[obj].sample_count())
            throw StateError("predictor returned the wrong number of labels");
          r.push_back(std::move(preds));
        }
        if (ckpt) write_checkpoint(*ckpt, t, ds, r, dataset_hash, opt.config_hash);
        results[i] = std::move(r);
        done[i] = 1;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, tasks.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (char d : done)
    if (!d) throw RunInterrupted("run stopped after " + std::to_string(opt.max_new_splits) + " new splits");
  return results;
}

inline std::vector<std::string> class_names(const data::Dataset& ds) {
  std::vector<std::string> out;
  for (auto m : ds.classes()) out.emplace_back(data::name_of(m));
  return out;
}

inline SeedAggregate assemble(const data::Dataset& ds, std::string_view protocol, const std::vector<Task>& tasks,
                              const std::vector<TaskResult>& results, const ProtocolOptions& opt,
                              const std::string& dataset_hash) {
  std::vector<EvaluationReport> reports;
  for (std::uint64_t seed : opt.seeds) {
    EvaluationReport r;
    r.protocol = protocol;
    r.model_kind = opt.model_kind;
    r.classes = class_names(ds);
    r.seed = seed;
    r.dataset_hash = dataset_hash;
    r.config_hash = opt.config_hash;
    std::vector<std::pair<std::size_t, std::vector<int>>> by_object;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].seed != seed) continue;
      for (std::size_t j = 0; j < tasks[i].test.size(); ++j) by_object.emplace_back(tasks[i].test[j], results[i][j]);
    }
    std::sort(by_object.begin(), by_object.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [obj, preds] : by_object) {
      const auto& o = ds.objects()[obj];
      r.outcomes.push_back({o.object_id, ds.label_of(o.material), std::move(preds)});
    }
    r.finalize();
    reports.push_back(std::move(r));
  }
  return SeedAggregate::from_reports(std::move(reports));
}

}  // namespace detail

/// Leave-one-object-out over the dataset's train-tagged objects: for every
/// seed and every object, train on all other objects and predict the held
/// object's samples. Split seeds are derive_seed(seed, object_id).
inline SeedAggregate run_looo(const data::Dataset& ds, const Trainer& trainer, const ProtocolOptions& opt) {
  if (opt.seeds.empty()) throw ConfigError("no seeds given");
  const auto splits = data::make_looo_splits(ds);
  std::vector<detail::Task> tasks;
  for (std::uint64_t seed : opt.seeds)
    for (const auto& s : splits) {
      const auto& id = ds.objects()[s.test_object].object_id;
      tasks.push_back({seed, derive_seed(seed, id), "looo-" + id, s.train_objects, {s.test_object}});
    }
  const auto hash = ds.content_hash();
  const auto results = detail::run_tasks(ds, tasks, trainer, opt, hash);
  return detail::assemble(ds, "looo", tasks, results, opt, hash);
}

/// One model per seed trained on every train-tagged object and evaluated on
/// the heldout-tagged objects.
inline SeedAggregate run_heldout(const data::Dataset& ds, const Trainer& trainer, const ProtocolOptions& opt) {
  if (opt.seeds.empty()) throw ConfigError("no seeds given");
  const auto train = ds.indices_with_split(data::SplitTag::train);
  const auto test = ds.indices_with_split(data::SplitTag::heldout);
  if (test.empty()) throw ConfigError("dataset has no heldout objects");
  if (train.empty()) throw ConfigError("dataset has no training objects");
  std::vector<detail::Task> tasks;
  for (std::uint64_t seed : opt.seeds) tasks.push_back({seed, derive_seed(seed, "heldout"), "heldout", train, test});
  const auto hash = ds.content_hash();
  const auto results = detail::run_tasks(ds, tasks, trainer, opt, hash);
  return detail::assemble(ds, "heldout", tasks, results, opt, hash);
}

/// Trains the neural pipeline of the given kind on each split.
template <std::floating_point T>
Trainer neural_trainer(models::ModelKind kind, models::RunHyper hyper) {
  return [kind, hyper](const data::Dataset& ds, std::span<const std::size_t> train, std::uint64_t seed) -> Predictor {
    auto features = data::build_features<T>(ds, train, hyper.pairing, derive_seed(seed, "pairing"));
    auto model = std::make_shared<const models::Classifier<T>>(
        models::train_classifier<T>(kind, std::move(features), ds.class_count(), hyper, seed));
    return [model](const data::Dataset& d, std::size_t object) {
      const std::size_t idx[] = {object};
      return model->predict(data::build_features<T>(d, idx)).labels;
    };
  };
}

/// Returns the true label of every sample.
inline Trainer oracle_trainer() {
  return [](const data::Dataset&, std::span<const std::size_t>, std::uint64_t) -> Predictor {
    return [](const data::Dataset& d, std::size_t object) {
      const auto& o = d.objects()[object];
      return std::vector<int>(o.sample_count(), d.label_of(o.material));
    };
  };
}

/// Uniformly random labels, seeded per (split, object).
inline Trainer uniform_random_trainer() {
  return [](const data::Dataset&, std::span<const std::size_t>, std::uint64_t seed) -> Predictor {
    return [seed](const data::Dataset& d, std::size_t object) {
      const auto& o = d.objects()[object];
      Rng rng(derive_seed(seed, o.object_id));
      std::vector<int> out(o.sample_count());
      for (int& v : out) v = static_cast<int>(uniform_index(rng, d.class_count()));
      return out;
    };
  };
}

}  // namespace specvis::eval
