#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace farkasnet {

enum class Aggregation { Sum, Mean };

std::string to_string(Aggregation agg);
Aggregation parse_aggregation(const std::string& name);
inline Reduction as_reduction(Aggregation agg) { return agg == Aggregation::Sum ? Reduction::Sum : Reduction::Mean; }

struct FarkasOptions {
  Aggregation aggregation = Aggregation::Sum;
  // Activation threshold: the layer guarantees some pre-activation > cutoff.
  double cutoff = 0.0;
  // Strict slack added to the clamped last bias.
  double epsilon = 1e-6;
  Activation activation = Activation::relu();

  friend bool operator==(const FarkasOptions&, const FarkasOptions&) = default;
};

// Uniform simplex point, 1/m per entry. Throws SpecError for m < 2.
std::vector<double> make_lambda(std::size_t m);

// Simplex vector with lambda^T W_eff = 0 for the given aggregation: uniform
// for Sum, proportional to (1, ..., 1, m-1) for Mean.
std::vector<double> certificate_lambda(std::size_t m, Aggregation agg);

// The appended weight row: -sum or -mean of the trainable rows.
std::vector<double> aggregate_rows(const Tensor& trainable, Aggregation agg);

// Effective last bias: max(c - Agg(b[0:m-1] - c) + eps, b[m-1]).
//
// The -c inside the aggregate keeps lambda^T (b_eff - c) > 0 for any cutoff,
// so some pre-activation exceeds c. For c = 0 this reduces to
// max(-Agg(b[0:m-1]) + eps, b[m-1]).
double aggregate_bias(std::span<const double> bias, Aggregation agg, double cutoff, double epsilon);

struct FarkasOutput {
  Var pre;  // pre-activation, [batch x m]
  Var out;  // activation applied
};

// Tape-level forward of a dense Farkas layer with trainable weight
// [(m-1) x n] and raw bias [m]. Gradients reach both the trainable rows
// and the raw bias through the direct and the aggregated paths.
FarkasOutput farkas_dense_forward(Var x, Var weight, Var bias, const FarkasOptions& options);

// Tape-level forward of a residual Farkas block. x is [batch x (m-1)].
FarkasOutput farkas_residual_forward(Var x, Var inner_weight, Var inner_bias, Var outer_weight, Var outer_bias,
                                     const FarkasOptions& options);

class FarkasDenseLayer {
 public:
  FarkasDenseLayer(std::size_t in_features, std::size_t out_features, FarkasOptions options = {});

  std::size_t in_features() const { return weight_.cols(); }
  std::size_t out_features() const { return bias_.size(); }
  const FarkasOptions& options() const { return options_; }

  Tensor& weight() { return weight_; }
  const Tensor& weight() const { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

  std::vector<double> lambda() const { return certificate_lambda(out_features(), options_.aggregation); }
  Tensor effective_weights() const;
  std::vector<double> effective_bias() const;
  // lambda^T b_eff: a lower bound on min_x max_i (W_eff x + b_eff)_i.
  double guaranteed_margin() const;

  FarkasOutput forward(Binding& binding, Var x);

 private:
  Tensor weight_;
  Tensor bias_;
  FarkasOptions options_;
};

// Residual block with input width m-1, hidden width h and output width m.
// The aggregated unit is built from the residual sum x + W2 u; its clamp is
// shifted by Agg(x) per row so the active-unit guarantee survives the
// residual offset.
class FarkasResidualBlock {
 public:
  FarkasResidualBlock(std::size_t in_features, std::size_t hidden, FarkasOptions options = {});

  std::size_t in_features() const { return inner_.in_features(); }
  std::size_t hidden() const { return inner_.out_features(); }
  std::size_t out_features() const { return outer_bias_.size(); }
  const FarkasOptions& options() const { return options_; }

  FarkasDenseLayer& inner() { return inner_; }
  const FarkasDenseLayer& inner() const { return inner_; }
  Tensor& outer_weight() { return outer_weight_; }
  const Tensor& outer_weight() const { return outer_weight_; }
  Tensor& outer_bias() { return outer_bias_; }
  const Tensor& outer_bias() const { return outer_bias_; }

  std::vector<double> lambda() const { return certificate_lambda(out_features(), options_.aggregation); }

  // Lower envelope of the outer pre-activation as an affine map of the
  // hidden activations u: rows [W2; aggregate_rows(W2)], bias
  // [b2[0:m-1], c - Agg(b2[0:m-1] - c) + eps]. Every outer pre-activation is
  // >= the envelope, with equality on the first m-1 units.
  Tensor envelope_weights() const;
  std::vector<double> envelope_bias() const;
  double guaranteed_margin() const;

  FarkasOutput forward(Binding& binding, Var x);

  // lambda^T z per row of an outer pre-activation z.
  std::vector<double> row_margins(const Tensor& pre) const;

 private:
  FarkasDenseLayer inner_;
  Tensor outer_weight_;
  Tensor outer_bias_;
  FarkasOptions options_;
};

}  // namespace farkasnet
