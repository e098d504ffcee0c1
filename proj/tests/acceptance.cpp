// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit status 1 if
// anything failed. The full-data tier needs a real corpus in the canonical
// format, named by SPECVIS_FULL_DATASET.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles/adam_reference.hpp"
#include "oracles/gradcheck.hpp"
#include "specvis/datasets/io.hpp"
#include "specvis/evaluation/protocols.hpp"
#include "specvis/evaluation/synthetic.hpp"
#include "specvis/models/classifier.hpp"
#include "specvis/numerics/adam.hpp"
#include "specvis/saliency/saliency.hpp"
#include "support/checks.hpp"

using namespace specvis;
using oracle::Mat;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::pass;
  std::vector<std::string> notes;
  std::vector<std::string> failures;

  void check(bool ok, const std::string& what) {
    if (ok) {
      notes.push_back(what);
    } else {
      failures.push_back(what);
      status = Status::fail;
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double x) { return fmt("%.1f%%", 100.0 * x); }

Mat randn(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return oracle::random_matrix(r, c, rng);
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(uniform_index(rng, 8));
  return y;
}

template <typename T>
std::vector<std::vector<T>> snapshot(const nn::Network<T>& net) {
  std::vector<std::vector<T>> out;
  for (auto a : net.arrays()) out.emplace_back(a.begin(), a.end());
  return out;
}

std::string serialized(const eval::SeedAggregate& agg) { return eval::to_keyvalue(agg).to_string(); }

std::vector<std::size_t> all_objects(const data::Dataset& ds) {
  std::vector<std::size_t> idx(ds.objects().size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// ---- criteria ---------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  auto record = [&](const std::string& name, const oracle::GradCheckResult& r) {
    o.check(r.ok(), name + " max rel err " + fmt("%.2e", r.max_rel_error) + " over " + std::to_string(r.checked) +
                        (r.ok() ? "" : " worst " + r.worst));
  };
  {
    nn::Linear<double> l(7, 5);
    Rng rng(1);
    for (double& w : l.weights().data()) w = standard_normal(rng);
    for (double& b : l.bias()) b = standard_normal(rng);
    record("linear", support::check_layer(l, randn(4, 7, 2), nn::Mode::training));
  }
  {
    nn::BatchNorm<double> bn(6);
    Rng rng(3);
    for (double& g : bn.gamma()) g = 1 + 0.5 * standard_normal(rng);
    for (double& b : bn.beta()) b = standard_normal(rng);
    record("batchnorm(train)", support::check_layer(bn, randn(4, 6, 4), nn::Mode::training));
    record("batchnorm(infer)", support::check_layer(bn, randn(4, 6, 5), nn::Mode::inference));
  }
  {
    nn::LeakyRelu<double> a(0.01);
    record("leaky_relu", support::check_layer(a, randn(4, 6, 6), nn::Mode::training));
  }
  {
    nn::Dropout<double> d(0.25, 99);
    record("dropout", support::check_layer(d, randn(4, 6, 7), nn::Mode::training));
  }
  const std::pair<const char*, models::NetworkSpec> archs[] = {{"spectral net", models::spectral_net_spec(8)},
                                                               {"image net", models::image_net_spec(1920, 8)},
                                                               {"fusion head", models::fusion_head_spec(8)}};
  std::uint64_t seed = 20;
  for (const auto& [name, spec] : archs) {
    seed += 3;
    auto net = models::build_network<double>(spec, {}, seed);
    record(name, support::check_network(net, randn(4, spec.input_dim, seed + 1), random_labels(4, seed + 2),
                                        nn::Mode::training));
  }
  return o;
}

Outcome optimizer_oracle() {
  Outcome o;
  auto run = [&](const char* name, nn::AdamConfig cfg, const std::function<double(int, std::size_t)>& grad) {
    std::vector<double> value{1.0, -0.7, 0.3}, g(3, 0.0);
    nn::Adam<double> adam(cfg);
    std::vector<oracle::ScalarAdam> ref(3, oracle::ScalarAdam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
    std::vector<double> w = value;
    double worst = 0.0;
    for (int step = 0; step < 100; ++step) {
      for (std::size_t k = 0; k < 3; ++k) g[k] = grad(step, k);
      const nn::ParamRef<double> refs[] = {{"w", value, g, false}};
      adam.step(refs);
      for (std::size_t k = 0; k < 3; ++k) {
        w[k] = ref[k].step(w[k], g[k]);
        worst = std::max(worst, std::abs(w[k] - value[k]));
      }
    }
    o.check(worst <= 1e-12, std::string(name) + " max |diff| " + fmt("%.1e", worst) + " over 100 steps");
  };
  run("constant gradient", {}, [](int, std::size_t k) { return 1.0 + static_cast<double>(k); });
  Rng rng(17);
  run("random gradient", {0.01, 0.8, 0.99, 1e-7}, [&](int, std::size_t) { return 3.0 * standard_normal(rng); });
  return o;
}

Outcome architecture_conformance() {
  Outcome o;
  auto count = [&](const char* name, const models::NetworkSpec& spec, std::size_t formula) {
    const auto n = models::linear_parameter_count(spec);
    auto net = models::build_network<float>(spec, {}, 1);
    std::size_t linear = 0;
    for (const auto& layer : net.layers())
      if (const auto* l = std::get_if<nn::Linear<float>>(&layer)) linear += l->weights().size() + l->bias().size();
    o.check(n == formula && linear == formula,
            std::string(name) + " linear weights+biases " + std::to_string(linear) + " (expected " +
                std::to_string(formula) + ")");
  };
  count("spectral", models::spectral_net_spec(8), 662 * 64 + 64 + 64 * 64 + 64 + 64 * 32 + 32 + 32 * 32 + 32 + 32 * 8 + 8);
  count("image", models::image_net_spec(1920, 8), 1920 * 128 + 128 + 128 * 64 + 64 + 64 * 32 + 32 + 32 * 8 + 8);
  count("fusion head", models::fusion_head_spec(8), 64 * 32 + 32 + 32 * 8 + 8);
  return o;
}

Outcome protocol_suite() {
  Outcome o;
  auto spec = support::separable_corpus(31);
  spec.samples_per_object = 6;
  spec.embedding_dim = 16;
  const auto ds = eval::generate_synthetic_corpus(spec);
  auto hyper = support::desk_hyper(16);
  hyper.unimodal.epochs = 3;
  hyper.fusion.epochs = 2;
  const auto base = eval::neural_trainer<float>(models::ModelKind::multimodal, hyper);

  std::mutex mu;
  std::vector<std::set<std::size_t>> train_sets;
  const eval::Trainer spy = [&](const data::Dataset& d, std::span<const std::size_t> train, std::uint64_t seed) {
    {
      std::lock_guard lock(mu);
      train_sets.emplace_back(train.begin(), train.end());
    }
    return base(d, train, seed);
  };
  eval::ProtocolOptions opt;
  opt.seeds = {0, 1};
  const auto reference = eval::run_looo(ds, spy, opt);

  const std::size_t n = ds.objects().size();
  o.check(n == 16 && train_sets.size() == 2 * n, std::to_string(train_sets.size() / 2) + " splits per seed over " +
                                                     std::to_string(n) + " objects");
  std::vector<std::size_t> left_out(n, 0);
  bool disjoint = true;
  for (const auto& t : train_sets) {
    disjoint &= t.size() == n - 1;
    for (std::size_t i = 0; i < n; ++i) left_out[i] += !t.contains(i);
  }
  bool exact = disjoint;
  for (auto c : left_out) exact &= c == 2;
  std::size_t predicted = 0;
  std::set<std::string> tested;
  for (const auto& out : reference.first().outcomes) {
    predicted += out.predicted.size();
    tested.insert(out.object_id);
  }
  exact &= tested.size() == n && predicted == ds.total_samples();
  o.check(exact, "each object held out exactly once per seed, " + std::to_string(predicted) + "/" +
                     std::to_string(ds.total_samples()) + " samples predicted once");

  support::TempDir dir;
  eval::ProtocolOptions interrupted = opt;
  interrupted.checkpoint_dir = dir / "ckpt";
  interrupted.max_new_splits = 7;
  std::size_t interruptions = 0;
  for (;;) {
    try {
      const auto resumed = eval::run_looo(ds, base, interrupted);
      o.check(serialized(resumed) == serialized(reference),
              "resume after " + std::to_string(interruptions) + " interruptions equals uninterrupted run");
      break;
    } catch (const eval::RunInterrupted&) {
      if (++interruptions > 10) {
        o.check(false, "resume made no progress");
        break;
      }
    }
  }

  eval::ProtocolOptions parallel = opt;
  parallel.workers = 4;
  o.check(serialized(eval::run_looo(ds, base, parallel)) == serialized(reference),
          "workers 4 result identical to workers 1");
  return o;
}

Outcome synthetic_end_to_end() {
  Outcome o;
  const auto hyper = support::desk_hyper(16);
  const auto kinds = {models::ModelKind::spectral, models::ModelKind::image, models::ModelKind::multimodal};

  const auto high = eval::generate_synthetic_corpus(support::separable_corpus(1));
  for (auto kind : kinds) {
    const auto agg = eval::run_looo(high, eval::neural_trainer<float>(kind, hyper), {});
    o.check(agg.overall.mean >= 0.95,
            "high separation LOOO " + std::string(models::name_of(kind)) + " " + pct(agg.overall.mean) + " (>= 95%)");
  }

  // Chance level is checked on heldout objects: under leave-one-object-out
  // the test class is under-represented in its own training split, which
  // biases uninformative predictions below 1/k.
  eval::SyntheticCorpusSpec zero;
  zero.objects_per_material = 4;
  zero.heldout_per_material = 2;
  zero.samples_per_object = 20;
  zero.embedding_dim = 32;
  zero.separation = 0.0;
  zero.object_spread = 0.0;
  zero.seed = 11;
  const auto flat = eval::generate_synthetic_corpus(zero);
  eval::ProtocolOptions seeds;
  seeds.seeds = {0, 1, 2, 3, 4};
  for (auto kind : kinds) {
    const auto agg = eval::run_heldout(flat, eval::neural_trainer<float>(kind, hyper), seeds);
    o.check(std::abs(agg.overall.mean - 0.125) <= 0.03, "zero separation heldout " +
                                                            std::string(models::name_of(kind)) + " " +
                                                            pct(agg.overall.mean) + " (12.5% +- 3)");
  }

  const auto oracle_looo = eval::run_looo(high, eval::oracle_trainer(), {});
  o.check(oracle_looo.overall.mean == 1.0, "stub oracle " + pct(oracle_looo.overall.mean));
  return o;
}

Outcome freeze_trim_suite() {
  Outcome o;
  auto spec = support::separable_corpus(6);
  spec.objects_per_material = 1;
  spec.samples_per_object = 8;
  const auto ds = eval::generate_synthetic_corpus(spec);
  const auto f = data::build_features<float>(ds, all_objects(ds));
  models::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  auto spectral = models::train_unimodal<float>(models::spectral_net_spec(8), {}, f.spectral, f.labels, cfg).network;
  auto image = models::train_unimodal<float>(models::image_net_spec(32, 8), {}, f.image, f.labels, cfg).network;

  const auto se = models::trim(spectral), ie = models::trim(image);
  const auto before_s = snapshot(se), before_i = snapshot(ie);
  const auto [fused, history] = models::train_fusion<float>(se, ie, f.spectral, f.image, f.labels, 8, {}, cfg);
  o.check(snapshot(fused.spectral_encoder) == before_s && snapshot(fused.image_encoder) == before_i,
          "encoder parameters and running statistics bitwise unchanged by fusion training");

  auto se_run = se, ie_run = ie;
  const bool same_s = se_run.forward(f.spectral, nn::Mode::training) ==
                      spectral.forward_prefix(f.spectral, nn::Mode::inference, spectral.size() - 1);
  const bool same_i =
      ie_run.forward(f.image, nn::Mode::training) == image.forward_prefix(f.image, nn::Mode::inference, image.size() - 1);
  o.check(same_s && same_i, "trimmed encoder output equals penultimate activation bitwise");

  const auto batch = fused.logits(f.spectral, f.image);
  bool invariant = true;
  for (std::size_t r = 0; r < f.size(); ++r) {
    const std::size_t one[] = {r};
    const auto single = fused.logits(f.spectral.gather_rows(one), f.image.gather_rows(one));
    for (std::size_t c = 0; c < batch.cols(); ++c) invariant &= single(0, c) == batch(r, c);
  }
  o.check(invariant, "inference logits batch-invariant over " + std::to_string(f.size()) + " rows");
  return o;
}

Outcome saliency_suite() {
  Outcome o;
  auto spec = support::separable_corpus(5);
  spec.objects_per_material = 1;
  spec.samples_per_object = 8;
  spec.embedding_dim = 12;
  const auto ds = eval::generate_synthetic_corpus(spec);
  const auto f = data::build_features<double>(ds, all_objects(ds));
  auto hyper = support::desk_hyper(16);
  hyper.unimodal.epochs = 5;
  hyper.fusion.epochs = 3;

  auto row = [](const Mat& m, std::size_t r) {
    auto v = m.row(r);
    return std::vector<double>(v.begin(), v.end());
  };
  for (auto kind : {models::ModelKind::spectral, models::ModelKind::image, models::ModelKind::multimodal}) {
    const auto c = models::train_classifier<double>(kind, f, 8, hyper, 21);
    auto logit = [&](const std::vector<double>& s, const std::vector<double>& i, int t) {
      const Mat sm(1, s.size(), s), im(1, i.size(), i);
      Mat out;
      if (kind == models::ModelKind::spectral) out = nn::Network<double>(c.spectral).forward(sm, nn::Mode::inference);
      if (kind == models::ModelKind::image) out = nn::Network<double>(c.image).forward(im, nn::Mode::inference);
      if (kind == models::ModelKind::multimodal) out = c.fusion->logits(sm, im);
      return out(0, static_cast<std::size_t>(t));
    };
    oracle::GradCheckResult r;
    for (std::size_t sample : {0u, 33u}) {
      const auto s = row(f.spectral, sample), i = row(f.image, sample);
      const auto map = saliency::saliency<double>(c, s, i);
      if (!map.spectral.empty()) {
        const auto fd = oracle::numeric_gradient([&](const auto& x) { return logit(x, i, map.target); }, s);
        for (std::size_t j = 0; j < fd.size(); ++j) r.record(map.spectral[j], std::abs(fd[j]), "spectral");
      }
      if (!map.image.empty()) {
        const auto fd = oracle::numeric_gradient([&](const auto& x) { return logit(s, x, map.target); }, i);
        for (std::size_t j = 0; j < fd.size(); ++j) r.record(map.image[j], std::abs(fd[j]), "image");
      }
    }
    o.check(r.ok(), std::string(models::name_of(kind)) + " finite-difference max rel err " +
                        fmt("%.2e", r.max_rel_error) + " over " + std::to_string(r.checked));
  }

  auto c = models::train_classifier<double>(models::ModelKind::spectral, f, 8, hyper, 22);
  auto& first = std::get<nn::Linear<double>>(c.spectral.layers().front());
  for (std::size_t out = 0; out < first.weights().rows(); ++out) first.weights()(out, 100) = 0.0;
  bool dead = true;
  for (std::size_t sample = 0; sample < 8; ++sample)
    dead &= saliency::saliency<double>(c, row(f.spectral, sample), row(f.image, sample)).spectral[100] == 0.0;
  o.check(dead, "zeroed first-layer input column gives zero saliency");
  return o;
}

struct FullTarget {
  std::string protocol;
  models::ModelKind kind;
  std::string materials;
  double expected;  // < 0: informational only
};

Outcome full_data_tier() {
  Outcome o;
  const char* path = std::getenv("SPECVIS_FULL_DATASET");
  if (!path || !*path) {
    o.status = Status::skip;
    o.notes.push_back("SPECVIS_FULL_DATASET not set; needs the released corpus plus extractor embeddings");
    return o;
  }
  const auto full = data::load_dataset(path);
  const char* ckpt = std::getenv("SPECVIS_FULL_CHECKPOINTS");
  const std::filesystem::path checkpoints = ckpt && *ckpt ? ckpt : "acceptance-checkpoints";
  const auto hyper = models::RunHyper{};  // published defaults

  eval::ProtocolOptions opt;
  opt.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  opt.workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* w = std::getenv("SPECVIS_WORKERS")) opt.workers = std::max(1, std::atoi(w));

  auto run = [&](const std::string& protocol, models::ModelKind kind, const std::string& materials) {
    const auto ds = materials == "all" ? full : data::filter_materials(full, data::parse_material_set(materials));
    auto run_opt = opt;
    run_opt.model_kind = std::string(models::name_of(kind));
    run_opt.config_hash = "acceptance-defaults";
    run_opt.checkpoint_dir = checkpoints / (protocol + "-" + run_opt.model_kind + "-" +
                                            std::to_string(ds.class_count()) + "mat");
    const auto trainer = eval::neural_trainer<float>(kind, hyper);
    return protocol == "looo" ? eval::run_looo(ds, trainer, run_opt) : eval::run_heldout(ds, trainer, run_opt);
  };
  const std::string five = "fabric,metal,paper,plastic,wood";
  const FullTarget targets[] = {{"heldout", models::ModelKind::multimodal, "all", 0.800},
                                {"heldout", models::ModelKind::multimodal, five, 0.908},
                                {"heldout", models::ModelKind::spectral, "all", 0.772},
                                {"looo", models::ModelKind::multimodal, "all", 0.742}};
  std::optional<eval::SeedAggregate> looo_multi;
  for (const auto& t : targets) {
    const auto agg = run(t.protocol, t.kind, t.materials);
    if (t.protocol == "looo") looo_multi = agg;
    o.check(std::abs(agg.overall.mean - t.expected) <= 0.03,
            t.protocol + " " + std::string(models::name_of(t.kind)) + " " + std::to_string(agg.first().classes.size()) +
                "-material " + pct(agg.overall.mean) + " (target " + pct(t.expected) + " +- 3)");
  }

  auto foam = [](const eval::SeedAggregate& agg) {
    const auto& cls = agg.first().classes;
    const auto at = std::find(cls.begin(), cls.end(), "foam");
    return agg.per_material.at(static_cast<std::size_t>(at - cls.begin())).mean;
  };
  const double fs = foam(run("looo", models::ModelKind::spectral, "all"));
  const double fi = foam(run("looo", models::ModelKind::image, "all"));
  const double fm = foam(*looo_multi);
  o.check(fm > fs && fm > fi, "foam LOOO multimodal " + pct(fm) + " vs spectral " + pct(fs) + ", image " + pct(fi));
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Gradient suite", gradient_suite},
      {"Optimizer oracle", optimizer_oracle},
      {"Architecture conformance", architecture_conformance},
      {"Protocol suite", protocol_suite},
      {"Synthetic end-to-end", synthetic_end_to_end},
      {"Freeze/trim suite", freeze_trim_suite},
      {"Saliency suite", saliency_suite},
      {"Full-data tier", full_data_tier},
  };
  bool failed = false;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.status = Status::fail;
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failed |= o.status == Status::fail;
    std::cout << tag << "  " << name << " (" << fmt("%.1f", secs) << " s)\n";
    for (const auto& n : o.failures) std::cout << "      x " << n << "\n";
    for (const auto& n : o.notes) std::cout << "        " << n << "\n";
    std::cout.flush();
  }
  return failed ? 1 : 0;
}
