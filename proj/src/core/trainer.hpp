#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "core/audit.hpp"
#include "core/dataset.hpp"
#include "core/network.hpp"
#include "core/sgd.hpp"

namespace farkasnet {

struct EpochMetrics {
  std::size_t epoch = 0;  // 0 is the state before any update
  double train_loss = 0.0;
  double train_err = 0.0;
  double test_err = 0.0;
};

struct RunReport {
  std::string label;
  std::uint64_t seed = 0;
  EpochMetrics initial;
  std::vector<EpochMetrics> epochs;  // one row per completed epoch
  bool born_dead_at_init = false;
  std::size_t dead_layer = 0;
  bool diverged = false;
  std::size_t diverged_epoch = 0;
  std::vector<LayerAudit> margins;  // per-layer audit of the final weights
  double wall_seconds = 0.0;

  const EpochMetrics& final_metrics() const { return epochs.empty() ? initial : epochs.back(); }
};

struct Evaluation {
  double loss = 0.0;
  double error = 0.0;  // fraction misclassified; non-finite logits count as errors
};

Evaluation evaluate(Network& network, const Dataset& data);

// Minibatch SGD with per-epoch shuffling. Batches never have a single row
// (a lone tail row joins the previous batch). Training stops updating once
// the loss turns non-finite; the remaining epochs still get a metrics row.
RunReport train_network(Network& network, const Dataset& train, const Dataset& test, const SgdConfig& cfg,
                        std::uint64_t seed, std::string label);

}  // namespace farkasnet
