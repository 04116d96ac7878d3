#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/farkas.hpp"
#include "core/lp.hpp"
#include "support/check.hpp"

using namespace farkasnet;

namespace {

constexpr double kEps = 1e-6;

FarkasOptions opts(Aggregation agg, double cutoff = 0.0, double eps = kEps) {
  FarkasOptions o;
  o.aggregation = agg;
  o.cutoff = cutoff;
  o.epsilon = eps;
  return o;
}

Tensor pre_activation(FarkasDenseLayer& layer, const Tensor& x) {
  Tape t;
  Binding b(t);
  return t.value(layer.forward(b, b.input(x)).pre);
}

Tensor pre_activation(FarkasResidualBlock& block, const Tensor& x) {
  Tape t;
  Binding b(t);
  return t.value(block.forward(b, b.input(x)).pre);
}

double row_max(const Tensor& z, std::size_t r) {
  const auto row = z.row(r);
  return *std::max_element(row.begin(), row.end());
}

}  // namespace

TEST_CASE("make_lambda") {
  CHECK(make_lambda(2) == std::vector<double>{0.5, 0.5});
  CHECK(make_lambda(4) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK_THROWS_AS(make_lambda(1), SpecError);
  CHECK_THROWS_AS(make_lambda(0), SpecError);
}

TEST_CASE("certificate lambda for mean aggregation is proportional to (1,...,1,m-1)") {
  for (std::size_t m = 2; m < 10; ++m) {
    const auto l = certificate_lambda(m, Aggregation::Mean);
    double total = 0.0;
    for (double v : l) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i + 1 < m; ++i) CHECK(l.back() == doctest::Approx(l[i] * double(m - 1)));
  }
  CHECK(certificate_lambda(3, Aggregation::Sum) == make_lambda(3));
}

TEST_CASE("aggregate_rows examples") {
  const Tensor w = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(aggregate_rows(w, Aggregation::Sum) == std::vector<double>{-4, -6});
  CHECK(aggregate_rows(w, Aggregation::Mean) == std::vector<double>{-2, -3});
  CHECK(aggregate_rows(Tensor::matrix({{0, 0}}), Aggregation::Sum) == std::vector<double>{-0.0, -0.0});
}

TEST_CASE("aggregate_bias examples") {
  CHECK(aggregate_bias(std::vector<double>{0.5, -0.2, -1}, Aggregation::Sum, 0.0, kEps) ==
        doctest::Approx(-0.3 + kEps).epsilon(1e-15));
  CHECK(aggregate_bias(std::vector<double>{0, 0, 7}, Aggregation::Sum, 0.0, kEps) == 7.0);
  CHECK_THROWS_AS(aggregate_bias(std::vector<double>{1}, Aggregation::Sum, 0.0, kEps), SpecError);
}

TEST_CASE("literal clamp c - Agg(b) + eps fails for a nonzero cutoff") {
  // mean, c = 1, zero weights, b = [0.5, 0.5 | -10]: z = b_eff for every x.
  const std::vector<double> b{0.5, 0.5, -10};
  const double literal = std::max(1.0 - (0.5 + 0.5) / 2.0 + kEps, b[2]);
  CHECK(std::max({b[0], b[1], literal}) < 1.0);  // every unit below c

  FarkasDenseLayer layer(2, 3, opts(Aggregation::Mean, 1.0));
  layer.bias() = Tensor::vector(b);
  const Tensor z = pre_activation(layer, Tensor::matrix({{0.3, -0.7}}));
  CHECK(z(0, 2) == doctest::Approx(1.5 + kEps).epsilon(1e-15));
  CHECK(row_max(z, 0) > 1.0);

  // b = [2, 4 | -10]: literal rule -2 + eps, shifted rule 1 - mean(1, 3) + eps.
  const std::vector<double> b2{2, 4, -10};
  CHECK(1.0 - (2.0 + 4.0) / 2.0 + kEps == doctest::Approx(-2.0 + kEps));
  CHECK(aggregate_bias(b2, Aggregation::Mean, 1.0, kEps) == doctest::Approx(-1.0 + kEps));
  // Both coincide at c = 0.
  CHECK(aggregate_bias(b2, Aggregation::Mean, 0.0, kEps) == doctest::Approx(-3.0 + kEps));
}

TEST_CASE("forward example: one active neuron") {
  FarkasDenseLayer layer(1, 2, opts(Aggregation::Sum));
  layer.weight() = Tensor::matrix({{1}});
  layer.bias() = Tensor::vector({-5, 0});
  Tape t;
  Binding b(t);
  const auto out = layer.forward(b, b.input(Tensor::matrix({{0}})));
  const Tensor& y = t.value(out.out);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == doctest::Approx(5.0 + kEps).epsilon(1e-15));
}

TEST_CASE("zero input yields the effective bias with a positive entry") {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 10), n = fkt::pick(rng, 1, 6);
    for (auto agg : {Aggregation::Sum, Aggregation::Mean}) {
      FarkasDenseLayer layer(n, m, opts(agg));
      layer.weight() = fkt::normal({m - 1, n}, rng);
      layer.bias() = fkt::normal({m}, rng);
      const Tensor z = pre_activation(layer, Tensor({1, n}, 0.0));
      CHECK(z.values() == layer.effective_bias());
      CHECK(row_max(z, 0) > 0.0);
    }
  }
}

TEST_CASE("guaranteed margin examples") {
  FarkasDenseLayer two(1, 2, opts(Aggregation::Sum));
  two.bias() = Tensor::vector({1, 1});
  CHECK(two.guaranteed_margin() == doctest::Approx(1.0));

  FarkasDenseLayer three(1, 3, opts(Aggregation::Sum));
  three.bias() = Tensor::vector({0.5, -0.2, -5});
  const auto be = three.effective_bias();
  CHECK(be[2] == doctest::Approx(-0.3 + kEps).epsilon(1e-15));
  CHECK(three.guaranteed_margin() == doctest::Approx(kEps / 3.0).epsilon(1e-6));
  CHECK(three.guaranteed_margin() > 0.0);
}

TEST_CASE("certificate identity and weak duality on random layers") {
  Rng rng(12);
  for (int k = 0; k < 300; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 12), n = fkt::pick(rng, 1, 8);
    const auto agg = k % 2 ? Aggregation::Mean : Aggregation::Sum;
    const double c = k % 3 == 0 ? 0.0 : fkt::uniform({1}, rng)[0];
    FarkasDenseLayer layer(n, m, opts(agg, c));
    layer.weight() = fkt::normal({m - 1, n}, rng);
    layer.bias() = fkt::normal({m}, rng);
    const Tensor w = layer.effective_weights();
    const auto lambda = layer.lambda();
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += lambda[i] * w(i, j);
      CHECK(std::abs(acc) <= 1e-9);
    }
    const lp::Problem p{w, layer.effective_bias()};
    const auto r = lp::min_max_margin(p);
    REQUIRE(r.status == lp::Status::Finite);
    CHECK(r.optimum >= layer.guaranteed_margin() - 1e-6);
    CHECK(r.optimum > c);
    auto shifted = p.bias;
    for (auto& v : shifted) v -= c;
    CHECK(lp::check_certificate(lambda, lp::Problem{w, shifted}));
  }
}

TEST_CASE("mean and sum effective weights differ by the last-row scale") {
  Rng rng(14);
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 9), n = fkt::pick(rng, 1, 6);
    FarkasDenseLayer s(n, m, opts(Aggregation::Sum)), a(n, m, opts(Aggregation::Mean));
    s.weight() = a.weight() = fkt::normal({m - 1, n}, rng);
    const Tensor ws = s.effective_weights(), wm = a.effective_weights();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i + 1 < m; ++i) CHECK(ws(i, j) == wm(i, j));
      CHECK(wm(m - 1, j) == doctest::Approx(ws(m - 1, j) / double(m - 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("aggregating outputs equals multiplying by the aggregated row") {
  Rng rng(15);
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 9), n = fkt::pick(rng, 1, 6), batch = fkt::pick(rng, 1, 5);
    for (auto agg : {Aggregation::Sum, Aggregation::Mean}) {
      FarkasDenseLayer layer(n, m, opts(agg));
      layer.weight() = fkt::normal({m - 1, n}, rng);
      layer.bias() = Tensor({m}, 0.0);
      const Tensor x = fkt::uniform({batch, n}, rng);
      const Tensor z = pre_activation(layer, x);
      const auto row = aggregate_rows(layer.weight(), agg);
      const double b_last = layer.effective_bias().back();
      for (std::size_t r = 0; r < batch; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += row[j] * x(r, j);
        CHECK(std::abs(z(r, m - 1) - (dot + b_last)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("active-unit guarantee over random layers and inputs") {
  Rng rng(16);
  std::size_t violations = 0;
  for (int k = 0; k < 400; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 64), n = fkt::pick(rng, 1, 64);
    FarkasDenseLayer layer(n, m, opts(k % 2 ? Aggregation::Mean : Aggregation::Sum));
    layer.weight() = fkt::normal({m - 1, n}, rng);
    layer.bias() = fkt::normal({m}, rng);
    const Tensor z = pre_activation(layer, fkt::normal({25, n}, rng, 3.0));
    for (std::size_t r = 0; r < z.rows(); ++r) violations += row_max(z, r) > 0.0 ? 0 : 1;
  }
  CHECK(violations == 0);
}

TEST_CASE("cutoff guarantee for leaky and elu") {
  Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 16), n = fkt::pick(rng, 1, 16);
    FarkasOptions o = opts(k % 2 ? Aggregation::Mean : Aggregation::Sum, -1.0 + 2.0 * fkt::uniform({1}, rng, 0, 1)[0]);
    o.activation = k % 3 ? Activation::elu(1.0) : Activation::leaky(0.1);
    FarkasDenseLayer layer(n, m, o);
    layer.weight() = fkt::normal({m - 1, n}, rng);
    layer.bias() = fkt::normal({m}, rng);
    const Tensor z = pre_activation(layer, fkt::normal({20, n}, rng, 2.0));
    for (std::size_t r = 0; r < z.rows(); ++r) CHECK(row_max(z, r) > o.cutoff);
  }
}

TEST_CASE("bias tie routes the gradient to the raw last bias") {
  // head = [1], sum: threshold = -1 + eps; set b_last equal to it.
  FarkasDenseLayer layer(1, 2, opts(Aggregation::Sum, 0.0, 0.5));
  layer.weight() = Tensor::matrix({{0}});
  layer.bias() = Tensor::vector({1, -0.5});
  Tape t;
  Binding b(t);
  auto out = layer.forward(b, b.input(Tensor::matrix({{0}})));
  t.backward(sum_all(slice_last(out.pre, 1, 2)));
  const auto g = b.gradients();
  CHECK(g[1][0] == 0.0);
  CHECK(g[1][1] == 1.0);
}

TEST_CASE("gradients flow through the aggregated row") {
  FarkasDenseLayer layer(2, 3, opts(Aggregation::Sum));
  layer.weight() = Tensor::matrix({{1, 0}, {0, 1}});
  layer.bias() = Tensor::vector({0, 0, 100});
  Tape t;
  Binding b(t);
  auto out = layer.forward(b, b.input(Tensor::matrix({{1, 2}})));
  t.backward(sum_all(slice_last(out.pre, 2, 3)));
  const auto g = b.gradients();
  // z_last = -(w1 + w2) . x + b_last
  CHECK(g[0] == Tensor::matrix({{-1, -2}, {-1, -2}}));
  CHECK(g[1] == Tensor::vector({0, 0, 1}));
}

TEST_CASE("Farkas layer and residual block match finite differences") {
  Rng rng(18);
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = fkt::pick(rng, 2, 6), n = fkt::pick(rng, 1, 5), h = fkt::pick(rng, 2, 6),
                      batch = fkt::pick(rng, 1, 4);
    const FarkasOptions o = opts(k % 2 ? Aggregation::Mean : Aggregation::Sum);
    auto dense = fkt::gradcheck({fkt::uniform({batch, n}, rng), fkt::uniform({m - 1, n}, rng), fkt::uniform({m}, rng)},
                                [&](Tape& t, const std::vector<Var>& v) {
                                  return fkt::weighted_sum(t, farkas_dense_forward(v[0], v[1], v[2], o).out, 5);
                                });
    INFO(dense.where);
    CHECK(dense.worst < 1e-4);
    auto res = fkt::gradcheck({fkt::uniform({batch, m - 1}, rng), fkt::uniform({h - 1, m - 1}, rng),
                               fkt::uniform({h}, rng), fkt::uniform({m - 1, h}, rng), fkt::uniform({m}, rng)},
                              [&](Tape& t, const std::vector<Var>& v) {
                                return fkt::weighted_sum(t, farkas_residual_forward(v[0], v[1], v[2], v[3], v[4], o).out, 6);
                              });
    INFO(res.where);
    CHECK(res.worst < 1e-4);
  }
}

TEST_CASE("residual block: zero case and the m = 2 offset") {
  FarkasResidualBlock block(3, 4, opts(Aggregation::Sum));
  const Tensor z = pre_activation(block, Tensor({1, 3}, 0.0));
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(0, 2) == 0.0);
  CHECK(z(0, 3) == doctest::Approx(kEps).epsilon(1e-15));

  // m = 2, W2 = 0: concat(y, -(x + y)) . (1/2, 1/2) = -x/2 before the bias.
  FarkasResidualBlock two(1, 2, opts(Aggregation::Sum));
  const Tensor x = Tensor::matrix({{3.0}});
  const Tensor z2 = pre_activation(two, x);
  // Per-row clamp shifted by Agg(x) keeps the last unit above zero.
  CHECK(z2(0, 1) > 0.0);
  CHECK(two.row_margins(z2)[0] > 0.0);
  CHECK(z2(0, 1) == doctest::Approx(kEps).epsilon(1e-15));
}

TEST_CASE("residual blocks keep a unit active on random inputs") {
  Rng rng(19);
  std::size_t violations = 0;
  for (int k = 0; k < 300; ++k) {
    const std::size_t in = fkt::pick(rng, 1, 12), h = fkt::pick(rng, 2, 12);
    FarkasResidualBlock block(in, h, opts(k % 2 ? Aggregation::Mean : Aggregation::Sum));
    block.inner().weight() = fkt::normal({h - 1, in}, rng);
    block.inner().bias() = fkt::normal({h}, rng);
    block.outer_weight() = fkt::normal({in, h}, rng);
    block.outer_bias() = fkt::normal({in + 1}, rng);
    const Tensor z = pre_activation(block, fkt::normal({30, in}, rng, 2.0));
    for (std::size_t r = 0; r < z.rows(); ++r) violations += row_max(z, r) > 0.0 ? 0 : 1;
    // The envelope LP on the hidden activations certifies the outer map.
    const lp::Problem env{block.envelope_weights(), block.envelope_bias()};
    CHECK(lp::check_certificate(block.lambda(), env));
  }
  CHECK(violations == 0);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(FarkasDenseLayer(3, 1), SpecError);
  CHECK_THROWS_AS(FarkasDenseLayer(0, 3), SpecError);
  CHECK_THROWS_AS(FarkasDenseLayer(2, 3, opts(Aggregation::Sum, 0.0, 0.0)), SpecError);
  CHECK_THROWS_AS(parse_aggregation("max"), SpecError);
  FarkasDenseLayer layer(2, 3);
  Tape t;
  Binding b(t);
  CHECK_THROWS_AS(layer.forward(b, b.input(Tensor({1, 3}, 0.0))), DimensionError);
}
