#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "core/lp.hpp"
#include "core/network.hpp"

namespace farkasnet {

// LP audit of one affine map feeding an activation.
struct LayerAudit {
  std::size_t entry = 0;  // index into Network::layers()
  std::string kind;       // dense, farkas_dense, farkas_residual
  std::string part;       // "", "inner" or "outer" for residual blocks
  bool farkas = false;
  double cutoff = 0.0;
  bool non_finite = false;  // weights or biases hold inf/nan; no LP was run
  lp::Status status = lp::Status::Finite;
  double p_star = 0.0;  // min_x max_i z_i, -inf when unbounded
  bool has_certificate = false;
  std::vector<double> certificate;  // stored lambda for Farkas layers, LP dual otherwise
  bool certificate_valid = false;
  double certified_margin = 0.0;  // lambda^T (b - c), when the certificate is valid
  bool certified = false;         // p* > c and the certificate checks out
};

// Per-layer certificates read from a weights file, indexed by layer entry.
using StoredLambdas = std::vector<std::vector<double>>;

// Audits every weight layer whose output goes straight into an activation.
// Dense layers followed by anything else (batchnorm, read-out) are skipped. Farkas layers are checked against
// `stored` when given (empty entries fall back to the construction lambda).
std::vector<LayerAudit> audit_network(const Network& network, const StoredLambdas* stored = nullptr);

bool all_certified(const std::vector<LayerAudit>& audits);

}  // namespace farkasnet
