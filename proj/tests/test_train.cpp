#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/sgd.hpp"
#include "core/trainer.hpp"
#include "support/check.hpp"
#include "support/tempdir.hpp"

using namespace farkasnet;

namespace {

SgdConfig plain_sgd(double lr, double mu, double wd) {
  SgdConfig c;
  c.learning_rate = lr;
  c.momentum = mu;
  c.weight_decay = wd;
  c.epochs = 1;
  return c;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

TEST_CASE("sgd step examples") {
  Tensor p = Tensor::vector({1.0});
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor::vector({0.5})};
  std::vector<Tensor> vel;
  sgd_step(params, grads, vel, plain_sgd(1.0, 0.0, 0.0), 0);
  CHECK(p[0] == 0.5);

  Tensor q = Tensor::vector({3.0, -2.0});
  std::vector<Tensor*> qp{&q};
  std::vector<Tensor> zero{Tensor::vector({0.0, 0.0})};
  std::vector<Tensor> qv;
  for (int i = 0; i < 10; ++i) sgd_step(qp, zero, qv, plain_sgd(0.1, 0.9, 0.0), 0);
  CHECK(q == Tensor::vector({3.0, -2.0}));

  std::vector<Tensor> wrong{Tensor::vector({1.0})};
  CHECK_THROWS_AS(sgd_step(qp, wrong, qv, plain_sgd(0.1, 0.9, 0.0), 0), UsageError);
}

TEST_CASE("two momentum steps match the unrolled recurrence") {
  const double lr = 0.05, mu = 0.9, wd = 0.01;
  const double p0 = 0.8, g1 = 0.3, g2 = -0.7;
  Tensor p = Tensor::vector({p0});
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> vel;
  sgd_step(params, std::vector<Tensor>{Tensor::vector({g1})}, vel, plain_sgd(lr, mu, wd), 0);
  sgd_step(params, std::vector<Tensor>{Tensor::vector({g2})}, vel, plain_sgd(lr, mu, wd), 0);
  const double v1 = g1 + wd * p0;
  const double p1 = p0 - lr * v1;
  const double v2 = mu * v1 + g2 + wd * p1;
  const double p2 = p1 - lr * v2;
  CHECK(std::abs(p[0] - p2) <= 1e-12);
}

TEST_CASE("learning rate schedule") {
  SgdConfig c;
  c.learning_rate = 0.1;
  c.epochs = 200;
  c.schedule = default_schedule(200);
  CHECK(learning_rate_at(c, 0) == 0.1);
  CHECK(learning_rate_at(c, 99) == 0.1);
  CHECK(learning_rate_at(c, 100) == doctest::Approx(0.01));
  CHECK(learning_rate_at(c, 150) == doctest::Approx(0.001));
  SgdConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(bad), UsageError);
  bad.learning_rate = 0.1;
  bad.momentum = 1.0;
  CHECK_THROWS_AS(validate(bad), UsageError);
}

TEST_CASE("two clusters") {
  const Dataset d = gen_two_clusters(5, 100, {2, 2}, {-2, -2}, 0.5);
  CHECK(d.size() == 200);
  CHECK(d.features() == 2);
  const Dataset again = gen_two_clusters(5, 100, {2, 2}, {-2, -2}, 0.5);
  CHECK(d.inputs == again.inputs);
  CHECK(d.labels == again.labels);

  const Dataset exact = gen_two_clusters(5, 10, {1, -1}, {-3, 0}, 0.0);
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(exact.inputs(r, 0) == 1.0);
    CHECK(exact.inputs(r + 10, 1) == 0.0);
  }
  CHECK_THROWS_AS(gen_two_clusters(5, 10, {1, 1}, {1, 1}, 0.5), InputError);

  // x + y = 0 separates the clouds in nearly every draw.
  int separated = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Dataset s = gen_two_clusters(seed, 100, {2, 2}, {-2, -2}, 0.5);
    bool ok = true;
    for (std::size_t r = 0; r < s.size() && ok; ++r) {
      const double side = s.inputs(r, 0) + s.inputs(r, 1);
      ok = s.labels[r] == 0 ? side > 0.0 : side < 0.0;
    }
    separated += ok ? 1 : 0;
  }
  CHECK(separated >= 999);
}

TEST_CASE("rings") {
  const std::vector<double> radii{1, 2, 3};
  const Dataset d = gen_rings(2, 50, radii, 0.0);
  CHECK(d.size() == 150);
  CHECK(d.num_classes == 3);
  for (std::size_t r = 0; r < d.size(); ++r) {
    CHECK(std::hypot(d.inputs(r, 0), d.inputs(r, 1)) == doctest::Approx(radii[std::size_t(d.labels[r])]));
  }
}

TEST_CASE("IDX fixture") {
  fkt::TempDir dir("idx");
  std::vector<std::uint8_t> images{0, 0, 0x08, 3};
  put_u32(images, 4);
  put_u32(images, 28);
  put_u32(images, 28);
  for (std::size_t i = 0; i < 4 * 784; ++i) images.push_back(static_cast<std::uint8_t>((i * 7) % 256));
  std::vector<std::uint8_t> labels{0, 0, 0x08, 1};
  put_u32(labels, 4);
  for (std::uint8_t l : {3, 1, 4, 1}) labels.push_back(l);
  fkt::write_bytes(dir.file("img"), images);
  fkt::write_bytes(dir.file("lab"), labels);

  const Dataset d = load_idx(dir.file("img"), dir.file("lab"));
  CHECK(d.inputs.shape() == Shape{4, 784});
  CHECK(d.labels == std::vector<int>{3, 1, 4, 1});
  CHECK(d.num_classes == 5);
  for (std::size_t i = 0; i < 4 * 784; ++i) {
    CHECK(d.inputs[i] == double((i * 7) % 256) / 255.0);
  }

  auto offset_of = [&](std::vector<std::uint8_t> bytes) -> std::size_t {
    fkt::write_bytes(dir.file("bad"), bytes);
    try {
      load_idx_images(dir.file("bad"));
    } catch (const FormatError& e) {
      return e.offset();
    }
    return std::size_t(-1);
  };
  auto bad = images;
  bad[0] = 1;
  CHECK(offset_of(bad) == 0);
  bad = images;
  bad[2] = 0x0d;
  CHECK(offset_of(bad) == 2);
  bad = images;
  bad.pop_back();
  CHECK(offset_of(bad) == bad.size());
  bad = images;
  bad.push_back(0);
  CHECK(offset_of(bad) == images.size());
  CHECK(offset_of({0, 0, 8, 3, 0, 0}) == 6);

  CHECK_THROWS_AS(load_idx_labels(dir.file("img")), FormatError);
  CHECK_THROWS_AS(load_idx(dir.file("img"), dir.file("missing")), IoError);
}

TEST_CASE("CSV loading") {
  fkt::TempDir dir("csv");
  fkt::write_text(dir.file("one.csv"), "1,0.5,0.5\n");
  const Dataset one = load_csv(dir.file("one.csv"));
  CHECK(one.size() == 1);
  CHECK(one.features() == 2);
  CHECK(one.labels[0] == 1);

  fkt::write_text(dir.file("empty.csv"), "");
  CHECK_THROWS_AS(load_csv(dir.file("empty.csv")), InputError);

  fkt::write_text(dir.file("head.csv"), "label,x,y\n0,1,2\n2,3,4\n");
  const Dataset h = load_csv(dir.file("head.csv"));
  CHECK(h.size() == 2);
  CHECK(h.num_classes == 3);
  CHECK(h.inputs == Tensor::matrix({{1, 2}, {3, 4}}));

  fkt::write_text(dir.file("bad.csv"), "0,1,2\n1,x,3\n");
  try {
    load_csv(dir.file("bad.csv"));
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 8);
  }
  fkt::write_text(dir.file("ragged.csv"), "0,1,2\n1,3\n");
  CHECK_THROWS_AS(load_csv(dir.file("ragged.csv")), FormatError);
  fkt::write_text(dir.file("neg.csv"), "-1,1\n");
  CHECK_THROWS_AS(load_csv(dir.file("neg.csv")), FormatError);
}

TEST_CASE("standardization") {
  Dataset d = gen_two_clusters(1, 50, {2, 2}, {-2, -2}, 0.5);
  const FeatureStats s = compute_stats(d.inputs);
  apply_stats(d, s);
  const FeatureStats after = compute_stats(d.inputs);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::abs(after.mean[c]) <= 1e-12);
    CHECK(after.std[c] == doctest::Approx(1.0));
  }
  REQUIRE(d.stats);
}

TEST_CASE("standardizing inputs leaves the layer construction alone") {
  DataConfig raw;
  raw.kind = "clusters";
  raw.n_per_class = 40;
  DataConfig norm = raw;
  norm.standardize = true;
  const DataSplit a = load_data(raw, 3), b = load_data(norm, 3);
  CHECK_FALSE(a.train.inputs == b.train.inputs);
  const FarkasOptions o{Aggregation::Mean, 0.0, 1e-6, Activation::relu()};
  Network na = Network::build(mlp_spec(Variant::Farkas, a.train.features(), 6, 3, 2, {}, o, 5));
  Network nb = Network::build(mlp_spec(Variant::Farkas, b.train.features(), 6, 3, 2, {}, o, 5));
  for (std::size_t i = 0; i < na.layers().size(); ++i) {
    if (const auto* fa = std::get_if<FarkasDenseLayer>(&na.layers()[i])) {
      const auto& fb = std::get<FarkasDenseLayer>(nb.layers()[i]);
      CHECK(fa->lambda() == fb.lambda());
      CHECK(fa->options() == fb.options());
      CHECK(fa->weight() == fb.weight());
    }
  }
}

TEST_CASE("training is deterministic and records every epoch") {
  DataConfig dc;
  dc.kind = "rings";
  dc.n_per_class = 30;
  const DataSplit data = load_data(dc, 4);
  SgdConfig sgd;
  sgd.learning_rate = 0.05;
  sgd.epochs = 6;
  sgd.batch_size = 16;
  sgd.schedule = default_schedule(6);
  auto run = [&] {
    Network net = Network::build(mlp_spec(Variant::Farkas, 2, 8, 3, 3, {}, {}, 2));
    return train_network(net, data.train, data.test, sgd, 9, "x");
  };
  const RunReport a = run(), b = run();
  REQUIRE(a.epochs.size() == 6);
  for (std::size_t e = 0; e < 6; ++e) {
    CHECK(a.epochs[e].epoch == e + 1);
    CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
    CHECK(a.epochs[e].test_err == b.epochs[e].test_err);
  }
  CHECK(all_certified(a.margins));
}

TEST_CASE("evaluate") {
  NetworkSpec s;
  s.layers = {DenseSpec{1, 2, true}};
  Network net = Network::build(s);
  auto& d = std::get<DenseLayer>(net.layers()[0]);
  d.weight = Tensor::matrix({{1}, {-1}});
  d.bias = Tensor::vector({0, 0});
  Dataset data;
  data.inputs = Tensor::matrix({{1}, {-1}, {2}, {-3}});
  data.labels = {0, 1, 1, 1};
  data.num_classes = 2;
  const Evaluation e = evaluate(net, data);
  CHECK(e.error == 0.25);
  d.weight = Tensor::matrix({{NAN}, {1}});
  CHECK(evaluate(net, data).error == 1.0);
}

TEST_CASE("a diverging run keeps its epoch rows") {
  DataConfig dc;
  dc.n_per_class = 20;
  const DataSplit data = load_data(dc, 1);
  SgdConfig sgd;
  sgd.learning_rate = 1e6;
  sgd.epochs = 5;
  sgd.batch_size = 8;
  Network net = Network::build(mlp_spec(Variant::Plain, 2, 8, 4, 3, InitScheme::symmetric_normal(3.0), {}, 1));
  const RunReport r = train_network(net, data.train, data.test, sgd, 1, "boom");
  CHECK(r.epochs.size() == 5);
  CHECK(r.diverged);
}

TEST_CASE("toy2d") {
  Toy2dConfig cfg;
  cfg.sgd.epochs = 200;
  const Toy2dReport r = run_toy2d(cfg);
  CHECK(r.unobserved_at_init == cfg.n_per_cluster);
  CHECK(r.plain_accuracy <= 0.6);
  CHECK(r.farkas_accuracy == 1.0);
  CHECK(r.farkas.epochs.size() == 200);
  CHECK(r.farkas.epochs[9].train_loss < r.farkas.initial.train_loss);
  CHECK(all_certified(r.farkas.margins));

  Toy2dConfig swapped = cfg;
  swapped.swap_labels = true;
  const Toy2dReport s = run_toy2d(swapped);
  CHECK(s.farkas_accuracy == 1.0);
  // The unseen cluster still has two zero logits; argmax ties go to class 0,
  // which is now its label, so the stuck plain net scores by accident.
  CHECK(s.unobserved_at_init == cfg.n_per_cluster);
  CHECK(s.plain_accuracy == 1.0);

  const Toy2dReport again = run_toy2d(cfg);
  CHECK(again.farkas.epochs.back().train_loss == r.farkas.epochs.back().train_loss);
}

TEST_CASE("born-dead table") {
  BornDeadConfig cfg;
  cfg.depths = {1, 30};
  cfg.trials = 100;
  const auto rows = run_born_dead(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].plain_fraction() >= 0.9);
  CHECK(rows[0].farkas_dead == 0);
  CHECK(rows[1].farkas_dead == 0);
  CHECK(rows[1].premise_holds == rows[1].trials);

  BornDeadConfig wide = cfg;
  wide.depths = {1};
  wide.width = 64;
  CHECK(run_born_dead(wide)[0].plain_fraction() < 0.05);

  BornDeadConfig par = cfg;
  par.jobs = 3;
  const auto rows_par = run_born_dead(par);
  CHECK(rows_par[1].plain_dead == rows[1].plain_dead);
}

TEST_CASE("norm stability") {
  NormCheckConfig cfg;
  const NormCheckReport r = run_norm_stability(cfg);
  CHECK(r.mean_weight_ok == r.trials);
  CHECK(r.mean_bias_ok == r.trials);
  CHECK(r.counterexample_sum_norm == 2.0);
  CHECK(r.counterexample_trainable_norm == 1.0);
  CHECK(r.counterexample_mean_norm == 1.0);
  CHECK(r.worst_mean_ratio <= 1.0 + 1e-12);

  // identical rows: mean row is -r and the norm is unchanged
  Tensor same = Tensor::matrix({{1, -2, 3}, {1, -2, 3}});
  const auto row = aggregate_rows(same, Aggregation::Mean);
  CHECK(row == std::vector<double>{-1, 2, -3});
}

TEST_CASE("compare with zero epochs reports only the initial state") {
  CompareConfig cfg;
  cfg.num_seeds = 1;
  cfg.sgd.epochs = 0;
  cfg.learning_rates = {0.01};
  cfg.data.n_per_class = 20;
  const auto runs = run_small_compare(cfg);
  CHECK(runs.size() == 4);
  for (const auto& r : runs) {
    CHECK(r.report.epochs.empty());
    CHECK(&r.report.final_metrics() == &r.report.initial);
  }
}

TEST_CASE("parallel_for rethrows") {
  std::vector<int> hits(20, 0);
  parallel_for(20, 4, [&](std::size_t i) { hits[i] = 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) { if (i == 3) throw InputError("x"); }), InputError);
}
