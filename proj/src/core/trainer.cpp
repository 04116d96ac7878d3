#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace farkasnet {

namespace {

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t f = x.cols();
  Tensor out({rows.size(), f});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * f));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch) out.emplace_back(b, std::min(n, b + batch));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

void check_compatible(const Network& net, const Dataset& data, const char* which) {
  if (data.size() == 0) throw InputError(std::string(which) + " set is empty");
  if (auto in = net.input_dim(); in && *in != data.features()) {
    throw DimensionError(std::string(which) + " set has " + std::to_string(data.features()) +
                         " features, network expects " + std::to_string(*in));
  }
  if (auto out = net.output_dim(); out && *out < data.num_classes) {
    throw DimensionError("network has " + std::to_string(*out) + " outputs for " +
                         std::to_string(data.num_classes) + " classes");
  }
}

}  // namespace

Evaluation evaluate(Network& network, const Dataset& data) {
  const Tensor logits = network.predict(data.inputs);
  const std::size_t k = logits.cols();
  double loss = 0.0;
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    bool finite = true;
    for (double v : row) finite = finite && std::isfinite(v);
    if (!finite) {
      ++wrong;
      loss = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const auto best = std::max_element(row.begin(), row.end());
    if (static_cast<int>(best - row.begin()) != data.labels[r]) ++wrong;
    double z = 0.0;
    for (double v : row) z += std::exp(v - *best);
    loss += std::log(z) + *best - row[static_cast<std::size_t>(data.labels[r])];
    (void)k;
  }
  return {loss / static_cast<double>(logits.rows()), static_cast<double>(wrong) / static_cast<double>(logits.rows())};
}

RunReport train_network(Network& network, const Dataset& train, const Dataset& test, const SgdConfig& cfg,
                        std::uint64_t seed, std::string label) {
  validate(cfg);
  check_compatible(network, train, "training");
  check_compatible(network, test, "test");
  const auto start = std::chrono::steady_clock::now();

  RunReport report;
  report.label = std::move(label);
  report.seed = seed;
  const BornDeadResult dead = is_born_dead(network, train.inputs);
  report.born_dead_at_init = dead.dead;
  report.dead_layer = dead.layer;

  auto measure = [&](std::size_t epoch) {
    const Evaluation tr = evaluate(network, train);
    const Evaluation te = evaluate(network, test);
    return EpochMetrics{epoch, tr.loss, tr.error, te.error};
  };
  report.initial = measure(0);

  Sgd sgd(cfg);
  Rng shuffle_rng(seed, 0x73687566);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batches = batch_bounds(train.size(), cfg.batch_size);
  std::vector<int> batch_labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (const auto& [lo, hi] : batches) {
      if (report.diverged) break;
      const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(train.labels[r]);
      Tape tape;
      Binding binding(tape);
      Var logits = network.forward(binding, binding.input(gather_rows(train.inputs, rows)), Mode::Train);
      Var loss = softmax_cross_entropy(logits, batch_labels);
      if (!std::isfinite(loss.value()[0])) {
        report.diverged = true;
        report.diverged_epoch = epoch + 1;
        break;
      }
      tape.backward(loss);
      const std::vector<Tensor> grads = binding.gradients();
      sgd.step(binding.parameters(), grads, epoch);
    }
    report.epochs.push_back(measure(epoch + 1));
    if (!report.diverged && !std::isfinite(report.epochs.back().train_loss)) {
      report.diverged = true;
      report.diverged_epoch = epoch + 1;
    }
  }

  report.margins = audit_network(network);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace farkasnet
