#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace farkasnet {

struct ScheduleStep {
  std::size_t epoch = 0;    // multiplier applies from this epoch on
  double multiplier = 1.0;  // multipliers compound
};

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::vector<ScheduleStep> schedule;
};

// x0.1 at 50% and again at 75% of the epochs.
std::vector<ScheduleStep> default_schedule(std::size_t epochs);

// Throws UsageError for a non-positive learning rate, momentum outside
// [0, 1), negative weight decay or a zero batch size.
void validate(const SgdConfig& cfg);

double learning_rate_at(const SgdConfig& cfg, std::size_t epoch);

// v <- mu v + g + wd p;  p <- p - lr(epoch) v
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, std::vector<Tensor>& velocity,
              const SgdConfig& cfg, std::size_t epoch);

class Sgd {
 public:
  explicit Sgd(SgdConfig cfg);

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads, std::size_t epoch) {
    sgd_step(params, grads, velocity_, cfg_, epoch);
  }
  const SgdConfig& config() const { return cfg_; }

 private:
  SgdConfig cfg_;
  std::vector<Tensor> velocity_;
};

}  // namespace farkasnet
