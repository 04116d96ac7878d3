#include "core/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace farkasnet {

namespace {

LayerAudit audit_affine(const Tensor& weights, const std::vector<double>& bias, double cutoff,
                        const std::vector<double>* lambda) {
  lp::Problem problem{weights, bias};
  for (auto& b : problem.bias) b -= cutoff;

  LayerAudit a;
  a.cutoff = cutoff;
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights.data().begin(), weights.data().end(), finite) ||
      !std::all_of(problem.bias.begin(), problem.bias.end(), finite)) {
    a.non_finite = true;
    a.p_star = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  const lp::Outcome outcome = lp::min_max_margin(problem);
  a.status = outcome.status;
  a.p_star = outcome.status == lp::Status::Finite ? outcome.optimum + cutoff
                                                   : -std::numeric_limits<double>::infinity();
  if (lambda && !lambda->empty()) {
    a.certificate = *lambda;
  } else if (outcome.certificate) {
    a.certificate = *outcome.certificate;
  }
  a.has_certificate = !a.certificate.empty();
  if (a.has_certificate && a.certificate.size() == problem.rows()) {
    a.certificate_valid = lp::check_certificate(a.certificate, problem);
    if (a.certificate_valid) a.certified_margin = lp::dual_value(a.certificate, problem);
  }
  a.certified = a.status == lp::Status::Finite && a.p_star > cutoff && a.certificate_valid;
  return a;
}

bool feeds_activation(const std::vector<Layer>& layers, std::size_t i) {
  return i + 1 < layers.size() && std::holds_alternative<ActivationLayer>(layers[i + 1]);
}

}  // namespace

std::vector<LayerAudit> audit_network(const Network& network, const StoredLambdas* stored) {
  std::vector<LayerAudit> out;
  const auto& layers = network.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::vector<double>* lambda = nullptr;
    if (stored && i < stored->size() && !(*stored)[i].empty()) lambda = &(*stored)[i];

    if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
      if (!feeds_activation(layers, i)) continue;
      std::vector<double> bias(d->bias.values());
      LayerAudit a = audit_affine(d->weight, bias, 0.0, nullptr);
      a.entry = i;
      a.kind = "dense";
      out.push_back(std::move(a));
    } else if (const auto* f = std::get_if<FarkasDenseLayer>(&layers[i])) {
      std::vector<double> own = f->lambda();
      LayerAudit a =
          audit_affine(f->effective_weights(), f->effective_bias(), f->options().cutoff, lambda ? lambda : &own);
      a.entry = i;
      a.kind = "farkas_dense";
      a.farkas = true;
      out.push_back(std::move(a));
    } else if (const auto* r = std::get_if<FarkasResidualBlock>(&layers[i])) {
      const double c = r->options().cutoff;
      std::vector<double> inner_lambda = r->inner().lambda();
      LayerAudit inner = audit_affine(r->inner().effective_weights(), r->inner().effective_bias(), c, &inner_lambda);
      inner.entry = i;
      inner.kind = "farkas_residual";
      inner.part = "inner";
      inner.farkas = true;
      out.push_back(std::move(inner));

      std::vector<double> own = r->lambda();
      LayerAudit outer = audit_affine(r->envelope_weights(), r->envelope_bias(), c, lambda ? lambda : &own);
      outer.entry = i;
      outer.kind = "farkas_residual";
      outer.part = "outer";
      outer.farkas = true;
      out.push_back(std::move(outer));
    }
  }
  return out;
}

bool all_certified(const std::vector<LayerAudit>& audits) {
  for (const auto& a : audits) {
    if (!a.certified) return false;
  }
  return true;
}

}  // namespace farkasnet
