#include "core/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "core/error.hpp"
#include "core/lp.hpp"
#include "core/rng.hpp"

namespace farkasnet {

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  for (unsigned t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

namespace {

SgdConfig with_default_schedule(SgdConfig cfg) {
  if (cfg.schedule.empty()) cfg.schedule = default_schedule(cfg.epochs);
  return cfg;
}

}  // namespace

Tensor toy2d_adversarial_weights(const Toy2dConfig& cfg) {
  const double dx = cfg.center_b[0] - cfg.center_a[0];
  const double dy = cfg.center_b[1] - cfg.center_a[1];
  const double len = std::hypot(dx, dy);
  if (!(len > 0.0)) throw InputError("cluster centers must differ");
  const double ux = -dx / len;
  const double uy = -dy / len;
  const double t = cfg.spread_degrees * std::numbers::pi / 180.0;
  Tensor w({2, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    const double a = i == 0 ? t : -t;
    w(i, 0) = std::cos(a) * ux - std::sin(a) * uy;
    w(i, 1) = std::sin(a) * ux + std::cos(a) * uy;
  }
  return w;
}

std::vector<double> toy2d_adversarial_bias(const Toy2dConfig& cfg) {
  const Tensor w = toy2d_adversarial_weights(cfg);
  const double mx = 0.5 * (cfg.center_a[0] + cfg.center_b[0]);
  const double my = 0.5 * (cfg.center_a[1] + cfg.center_b[1]);
  return {-1.0 - (w(0, 0) * mx + w(0, 1) * my), -1.0 - (w(1, 0) * mx + w(1, 1) * my)};
}

Dataset toy2d_data(const Toy2dConfig& cfg) {
  Dataset d = gen_two_clusters(cfg.seed, cfg.n_per_cluster, cfg.center_a, cfg.center_b, cfg.std);
  if (cfg.swap_labels) {
    for (auto& l : d.labels) l = 1 - l;
  }
  return d;
}

Toy2dReport run_toy2d(const Toy2dConfig& cfg) {
  const Dataset data = toy2d_data(cfg);
  const Tensor w = toy2d_adversarial_weights(cfg);
  const std::vector<double> b = toy2d_adversarial_bias(cfg);
  const SgdConfig sgd = with_default_schedule(cfg.sgd);

  // plain: relu outputs are the two logits
  Network plain(std::vector<Layer>{DenseLayer{w, Tensor::vector(b), true}, ActivationLayer{Activation::relu()}});

  // Farkas: the same two rows plus the aggregated one; three logits
  FarkasDenseLayer fl(2, 3, cfg.farkas);
  fl.weight() = w;
  fl.bias() = Tensor::vector({b[0], b[1], 0.0});
  Network farkas(std::vector<Layer>{std::move(fl)});

  Toy2dReport report;
  const Tensor h = plain.predict(data.inputs);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    if (h(r, 0) == 0.0 && h(r, 1) == 0.0) ++report.unobserved_at_init;
  }
  report.plain = train_network(plain, data, data, sgd, cfg.seed, "plain");
  report.farkas = train_network(farkas, data, data, sgd, cfg.seed, "farkas");
  report.plain_accuracy = 1.0 - report.plain.final_metrics().train_err;
  report.farkas_accuracy = 1.0 - report.farkas.final_metrics().train_err;
  for (const auto& e : report.farkas.epochs) {
    if (e.train_err == 0.0) {
      report.farkas_first_perfect_epoch = e.epoch;
      break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

NetworkSpec plain_stack_spec(std::size_t input_dim, std::size_t width, std::size_t depth, const InitScheme& init,
                             std::uint64_t seed) {
  NetworkSpec spec;
  spec.init = init;
  spec.seed = seed;
  for (std::size_t d = 0; d < depth; ++d) {
    spec.layers.push_back(DenseSpec{d == 0 ? input_dim : width, width, true});
    spec.layers.push_back(ActivationSpec{Activation::relu()});
  }
  return spec;
}

NetworkSpec farkas_stack_spec(std::size_t input_dim, std::size_t width, std::size_t depth, const InitScheme& init,
                              const FarkasOptions& options, std::uint64_t seed) {
  NetworkSpec spec;
  spec.init = init;
  spec.seed = seed;
  for (std::size_t d = 0; d < depth; ++d) {
    spec.layers.push_back(FarkasDenseSpec{d == 0 ? input_dim : width, width, options});
  }
  return spec;
}

std::vector<BornDeadRow> run_born_dead(const BornDeadConfig& cfg) {
  if (cfg.trials == 0 || cfg.probes == 0) throw UsageError("born-dead study needs trials and probes");
  if (cfg.width < 2) throw UsageError("born-dead study needs width >= 2 for the Farkas variant");
  std::vector<BornDeadRow> rows;
  for (std::size_t depth : cfg.depths) {
    if (depth == 0) throw UsageError("depth must be positive");
    std::vector<char> plain_dead(cfg.trials, 0);
    std::vector<char> farkas_dead(cfg.trials, 0);
    std::vector<double> premise(cfg.trials, 0.0);
    parallel_for(cfg.trials, cfg.jobs, [&](std::size_t t) {
      const Rng trial(cfg.seed, depth * 1000003ULL + t);
      Rng probe_rng = trial.split(0);
      std::normal_distribution<double> normal(0.0, 1.0);
      Tensor probe({cfg.probes, cfg.input_dim});
      for (auto& v : probe.data()) v = normal(probe_rng);
      const std::uint64_t net_seed = trial.split(1)();

      Network plain = Network::build(plain_stack_spec(cfg.input_dim, cfg.width, depth, cfg.init, net_seed));
      Network farkas =
          Network::build(farkas_stack_spec(cfg.input_dim, cfg.width, depth, cfg.init, cfg.farkas, net_seed));
      plain_dead[t] = is_born_dead(plain, probe).dead;
      farkas_dead[t] = is_born_dead(farkas, probe).dead;

      const auto& first = std::get<DenseLayer>(plain.layers()[0]);
      double p = 1.0;
      for (std::size_t i = 0; i < first.weight.rows(); ++i) {
        std::size_t negative = 0;
        for (std::size_t k = 0; k < cfg.probes; ++k) {
          double z = first.bias[i];
          for (std::size_t j = 0; j < cfg.input_dim; ++j) z += first.weight(i, j) * probe(k, j);
          if (z < 0.0) ++negative;
        }
        p = std::min(p, static_cast<double>(negative) / static_cast<double>(cfg.probes));
      }
      premise[t] = p;
    });
    BornDeadRow row;
    row.depth = depth;
    row.trials = cfg.trials;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      row.plain_dead += plain_dead[t] ? 1 : 0;
      row.farkas_dead += farkas_dead[t] ? 1 : 0;
      row.premise_holds += premise[t] > 0.0 ? 1 : 0;
      row.mean_premise_p += premise[t];
    }
    row.mean_premise_p /= static_cast<double>(cfg.trials);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

NormCheckReport run_norm_stability(const NormCheckConfig& cfg) {
  if (cfg.trials == 0) throw UsageError("norm check needs at least one trial");
  if (cfg.max_rows == 0 || cfg.max_cols == 0) throw UsageError("norm check needs positive dimensions");
  NormCheckReport rep;
  rep.trials = cfg.trials;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(cfg.seed, t);
    std::uniform_int_distribution<std::size_t> rows_dist(1, cfg.max_rows);
    std::uniform_int_distribution<std::size_t> cols_dist(1, cfg.max_cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t k = rows_dist(rng);
    const std::size_t n = cols_dist(rng);
    Tensor w({k, n});
    for (auto& v : w.data()) v = normal(rng);
    std::vector<double> b(k);
    for (auto& v : b) v = normal(rng);

    const double base = lp::inf_norm(w);
    for (Aggregation agg : {Aggregation::Mean, Aggregation::Sum}) {
      const std::vector<double> extra = aggregate_rows(w, agg);
      Tensor a({k + 1, n});
      std::copy(w.data().begin(), w.data().end(), a.data().begin());
      std::copy(extra.begin(), extra.end(), a.data().begin() + static_cast<std::ptrdiff_t>(k * n));
      const double norm = lp::inf_norm(a);
      const double ratio = norm / base;
      if (agg == Aggregation::Mean) {
        if (norm <= base * (1.0 + 1e-12)) ++rep.mean_weight_ok;
        rep.worst_mean_ratio = std::max(rep.worst_mean_ratio, ratio);
      } else {
        if (norm > base * (1.0 + 1e-12)) ++rep.sum_weight_increased;
        rep.worst_sum_ratio = std::max(rep.worst_sum_ratio, ratio);
      }
    }

    double bmax = 0.0;
    double bmean = 0.0;
    for (double v : b) {
      bmax = std::max(bmax, std::abs(v));
      bmean += v;
    }
    bmean /= static_cast<double>(k);
    if (std::abs(-bmean) <= bmax * (1.0 + 1e-12)) ++rep.mean_bias_ok;
  }

  const Tensor id = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}});
  rep.counterexample_trainable_norm = lp::inf_norm(id);
  for (Aggregation agg : {Aggregation::Sum, Aggregation::Mean}) {
    const auto extra = aggregate_rows(id, agg);
    const Tensor a = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}, {extra[0], extra[1]}});
    (agg == Aggregation::Sum ? rep.counterexample_sum_norm : rep.counterexample_mean_norm) = lp::inf_norm(a);
  }
  return rep;
}

// ---------------------------------------------------------------------------

DataSplit load_data(const DataConfig& cfg, std::uint64_t seed) {
  DataSplit split;
  const Rng root(seed, 0x64617461);
  if (cfg.kind == "rings") {
    split.train = gen_rings(root.split(0)(), cfg.n_per_class, cfg.radii, cfg.noise);
    split.test = gen_rings(root.split(1)(), cfg.n_per_class, cfg.radii, cfg.noise);
  } else if (cfg.kind == "clusters") {
    split.train = gen_two_clusters(root.split(0)(), cfg.n_per_class, {2.0, 2.0}, {-2.0, -2.0}, cfg.noise);
    split.test = gen_two_clusters(root.split(1)(), cfg.n_per_class, {2.0, 2.0}, {-2.0, -2.0}, cfg.noise);
  } else if (cfg.kind == "csv" || cfg.kind == "idx") {
    if (cfg.train_path.empty()) throw InputError("dataset kind '" + cfg.kind + "' needs data.train");
    auto read = [&](const std::string& path, const std::string& labels) {
      if (cfg.kind == "csv") return load_csv(path);
      if (labels.empty()) throw InputError("IDX data needs a labels file");
      return load_idx(path, labels);
    };
    Dataset all = read(cfg.train_path, cfg.train_labels_path);
    if (!cfg.test_path.empty()) {
      split.train = std::move(all);
      split.test = read(cfg.test_path, cfg.test_labels_path);
    } else {
      if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw InputError("test fraction must be in (0, 1)");
      }
      if (all.size() < 2) throw InputError("need at least two rows to hold out a test set");
      std::vector<std::size_t> order(all.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle = root.split(2);
      std::shuffle(order.begin(), order.end(), shuffle);
      auto n_test = static_cast<std::size_t>(std::round(cfg.test_fraction * static_cast<double>(all.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, all.size() - 1);
      split.test = subset(all, std::span(order).first(n_test));
      split.train = subset(all, std::span(order).subspan(n_test));
    }
    const std::size_t classes = std::max(split.train.num_classes, split.test.num_classes);
    split.train.num_classes = split.test.num_classes = classes;
  } else {
    throw InputError("unknown dataset kind '" + cfg.kind + "'");
  }
  if (split.train.features() != split.test.features()) {
    throw DimensionError("train and test sets have different feature counts");
  }
  if (cfg.standardize) {
    const FeatureStats stats = compute_stats(split.train.inputs);
    apply_stats(split.train, stats);
    apply_stats(split.test, stats);
  }
  return split;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Plain:
      return "plain";
    case Variant::PlainBn:
      return "plain_bn";
    case Variant::Farkas:
      return "farkas";
    case Variant::FarkasBn:
      return "farkas_bn";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "plain") return Variant::Plain;
  if (name == "plain_bn") return Variant::PlainBn;
  if (name == "farkas") return Variant::Farkas;
  if (name == "farkas_bn") return Variant::FarkasBn;
  throw UsageError("unknown variant '" + name + "'");
}

NetworkSpec mlp_spec(Variant variant, std::size_t input_dim, std::size_t width, std::size_t depth,
                     std::size_t classes, const InitScheme& init, const FarkasOptions& options,
                     std::uint64_t seed) {
  if (depth == 0 || width == 0 || classes == 0) throw SpecError("MLP needs positive depth, width and classes");
  const bool farkas = variant == Variant::Farkas || variant == Variant::FarkasBn;
  const bool bn = variant == Variant::PlainBn || variant == Variant::FarkasBn;
  NetworkSpec spec;
  spec.init = init;
  spec.seed = seed;
  for (std::size_t d = 0; d < depth; ++d) {
    const std::size_t in = d == 0 ? input_dim : width;
    if (farkas) {
      // batchnorm follows the activation
      spec.layers.push_back(FarkasDenseSpec{in, width, options});
      if (bn) spec.layers.push_back(BatchNormSpec{width});
    } else {
      spec.layers.push_back(DenseSpec{in, width, true});
      if (bn) spec.layers.push_back(BatchNormSpec{width});
      spec.layers.push_back(ActivationSpec{Activation::relu()});
    }
  }
  spec.layers.push_back(DenseSpec{width, classes, true});
  return spec;
}

std::vector<CompareRun> run_small_compare(const CompareConfig& cfg) {
  if (cfg.num_seeds == 0) throw UsageError("compare needs at least one seed");
  std::vector<CompareRun> runs;
  for (std::size_t s = 0; s < cfg.num_seeds; ++s) {
    for (double lr : cfg.learning_rates) {
      for (Variant v : cfg.variants) runs.push_back({v, lr, cfg.seed + s, {}});
    }
  }
  parallel_for(runs.size(), cfg.jobs, [&](std::size_t i) {
    CompareRun& run = runs[i];
    const DataSplit data = load_data(cfg.data, run.seed);
    SgdConfig sgd = cfg.sgd;
    sgd.learning_rate = run.learning_rate;
    if (sgd.epochs > 0) sgd = with_default_schedule(sgd);
    Network net = Network::build(
        mlp_spec(run.variant, data.train.features(), cfg.width, cfg.depth, data.train.num_classes, cfg.init,
                 cfg.farkas, run.seed));
    run.report = train_network(net, data.train, data.test, sgd, run.seed, to_string(run.variant));
  });
  return runs;
}

}  // namespace farkasnet
