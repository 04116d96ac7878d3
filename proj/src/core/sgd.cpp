#include "core/sgd.hpp"

#include <cmath>

#include "core/error.hpp"

namespace farkasnet {

std::vector<ScheduleStep> default_schedule(std::size_t epochs) {
  return {{epochs / 2, 0.1}, {(3 * epochs) / 4, 0.1}};
}

void validate(const SgdConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw UsageError("learning rate must be positive");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw UsageError("momentum must be in [0, 1)");
  if (!(cfg.weight_decay >= 0.0)) throw UsageError("weight decay must be non-negative");
  if (cfg.batch_size == 0) throw UsageError("batch size must be positive");
}

double learning_rate_at(const SgdConfig& cfg, std::size_t epoch) {
  double lr = cfg.learning_rate;
  for (const auto& step : cfg.schedule) {
    if (epoch >= step.epoch) lr *= step.multiplier;
  }
  return lr;
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, std::vector<Tensor>& velocity,
              const SgdConfig& cfg, std::size_t epoch) {
  if (params.size() != grads.size()) {
    throw UsageError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (velocity.empty()) {
    for (auto* p : params) velocity.emplace_back(p->shape(), 0.0);
  }
  if (velocity.size() != params.size()) throw UsageError("sgd_step: optimizer state does not match parameters");
  const double lr = learning_rate_at(cfg, epoch);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& v = velocity[k];
    if (!p.same_shape(g) || !p.same_shape(v)) {
      throw UsageError("sgd_step: gradient " + shape_string(g.shape()) + " for parameter " +
                       shape_string(p.shape()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * p[i];
      p[i] -= lr * v[i];
    }
  }
}

Sgd::Sgd(SgdConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

}  // namespace farkasnet
