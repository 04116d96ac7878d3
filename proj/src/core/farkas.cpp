#include "core/farkas.hpp"

#include <cmath>

#include "core/error.hpp"

namespace farkasnet {

std::string to_string(Aggregation agg) { return agg == Aggregation::Sum ? "sum" : "mean"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "sum") return Aggregation::Sum;
  if (name == "mean") return Aggregation::Mean;
  throw SpecError("unknown aggregation '" + name + "' (expected sum or mean)");
}

std::vector<double> make_lambda(std::size_t m) {
  if (m < 2) throw SpecError("Farkas layers need at least 2 outputs, got " + std::to_string(m));
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

std::vector<double> certificate_lambda(std::size_t m, Aggregation agg) {
  if (agg == Aggregation::Sum) return make_lambda(m);
  if (m < 2) throw SpecError("Farkas layers need at least 2 outputs, got " + std::to_string(m));
  const double k = static_cast<double>(m - 1);
  std::vector<double> lambda(m, 1.0 / (2.0 * k));
  lambda.back() = 0.5;
  return lambda;
}

std::vector<double> aggregate_rows(const Tensor& trainable, Aggregation agg) {
  if (trainable.rank() != 2) throw DimensionError("aggregate_rows expects a matrix");
  const std::size_t rows = trainable.rows(), cols = trainable.cols();
  std::vector<double> out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += trainable(r, c);
  const double factor = agg == Aggregation::Sum ? -1.0 : -1.0 / static_cast<double>(rows);
  for (auto& v : out) v *= factor;
  return out;
}

namespace {

// c - Agg(head - c) + eps, evaluated in the same operation order as the tape
// version so effective_bias() matches the forward pass bit for bit.
double clamp_threshold(std::span<const double> head, Aggregation agg, double cutoff, double epsilon) {
  double acc = 0.0;
  for (double b : head) acc += b - cutoff;
  if (agg == Aggregation::Mean) acc *= 1.0 / static_cast<double>(head.size());
  return -acc + (cutoff + epsilon);
}

}  // namespace

double aggregate_bias(std::span<const double> bias, Aggregation agg, double cutoff, double epsilon) {
  if (bias.size() < 2) throw SpecError("Farkas bias needs at least 2 entries");
  const std::size_t head = bias.size() - 1;
  const double clamp = clamp_threshold(bias.first(head), agg, cutoff, epsilon);
  // Ties resolve to the raw trainable bias.
  return clamp > bias[head] ? clamp : bias[head];
}

namespace {

// max(c - Agg(b[0:m-1] - c) + eps, b[m-1]) on the tape, shape [1].
struct BiasParts {
  Var head;       // b[0:m-1]
  Var last;       // b[m-1]
  Var threshold;  // c - Agg(b[0:m-1] - c) + eps
};

BiasParts split_bias(Var bias, const FarkasOptions& options) {
  const std::size_t m = bias.value().size();
  Var head = slice_last(bias, 0, m - 1);
  Var last = slice_last(bias, m - 1, m);
  Var agg = reduce(add_scalar(head, -options.cutoff), as_reduction(options.aggregation));
  Var threshold = add_scalar(scale(agg, -1.0), options.cutoff + options.epsilon);
  return {head, last, threshold};
}

void check_epsilon(const FarkasOptions& options) {
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon)) {
    throw SpecError("Farkas epsilon must be positive and finite");
  }
  if (!std::isfinite(options.cutoff)) throw SpecError("Farkas cutoff must be finite");
}

}  // namespace

FarkasOutput farkas_dense_forward(Var x, Var weight, Var bias, const FarkasOptions& options) {
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  const Tensor& xv = x.value();
  if (w.rank() != 2 || b.rank() != 1 || b.size() != w.rows() + 1) {
    throw DimensionError("Farkas layer parameters " + shape_string(w.shape()) + " / " + shape_string(b.shape()) +
                         " are inconsistent");
  }
  if (xv.rank() != 2 || xv.cols() != w.cols()) {
    throw DimensionError("Farkas layer expects " + std::to_string(w.cols()) + " input features, got " +
                         shape_string(xv.shape()));
  }
  const Reduction mode = as_reduction(options.aggregation);
  Var y = matmul(x, transpose(weight));
  Var y_agg = scale(reduce(y, mode), -1.0);

  BiasParts parts = split_bias(bias, options);
  Var b_agg = maximum(parts.threshold, parts.last);
  Var effective_bias = concat_last(parts.head, b_agg);

  Var pre = add_bias(concat_last(y, y_agg), effective_bias);
  return {pre, activate(pre, options.activation)};
}

FarkasOutput farkas_residual_forward(Var x, Var inner_weight, Var inner_bias, Var outer_weight, Var outer_bias,
                                     const FarkasOptions& options) {
  const Tensor& w2 = outer_weight.value();
  const Tensor& b2 = outer_bias.value();
  const Tensor& xv = x.value();
  if (w2.rank() != 2 || b2.rank() != 1 || b2.size() != w2.rows() + 1) {
    throw DimensionError("residual block outer parameters " + shape_string(w2.shape()) + " / " +
                         shape_string(b2.shape()) + " are inconsistent");
  }
  if (xv.rank() != 2 || xv.cols() != w2.rows()) {
    throw DimensionError("residual block expects " + std::to_string(w2.rows()) + " input features, got " +
                         shape_string(xv.shape()));
  }
  if (inner_bias.value().size() != w2.cols()) {
    throw DimensionError("residual block hidden width mismatch");
  }
  const Reduction mode = as_reduction(options.aggregation);
  const std::size_t batch = xv.rows();

  Var u = farkas_dense_forward(x, inner_weight, inner_bias, options).out;
  Var y = matmul(u, transpose(outer_weight));
  Var y_agg = scale(reduce(add(x, y), mode), -1.0);

  BiasParts parts = split_bias(outer_bias, options);
  Tape& tape = *x.tape;
  Var zeros = tape.constant(Tensor({batch, 1}, 0.0));
  Var threshold = add_bias(reduce(x, mode), parts.threshold);
  Var b_agg = maximum(threshold, add_bias(zeros, parts.last));

  Var pre = concat_last(add_bias(y, parts.head), add(y_agg, b_agg));
  return {pre, activate(pre, options.activation)};
}

// ---------------------------------------------------------------------------

FarkasDenseLayer::FarkasDenseLayer(std::size_t in_features, std::size_t out_features, FarkasOptions options)
    : options_(options) {
  if (out_features < 2) {
    throw SpecError("Farkas layers need at least 2 outputs, got " + std::to_string(out_features));
  }
  if (in_features < 1) throw SpecError("Farkas layers need at least 1 input");
  check_epsilon(options_);
  weight_ = Tensor({out_features - 1, in_features}, 0.0);
  bias_ = Tensor({out_features}, 0.0);
}

Tensor FarkasDenseLayer::effective_weights() const {
  const std::size_t m = out_features(), n = in_features();
  Tensor out({m, n});
  for (std::size_t r = 0; r + 1 < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = weight_(r, c);
  const auto last = aggregate_rows(weight_, options_.aggregation);
  for (std::size_t c = 0; c < n; ++c) out(m - 1, c) = last[c];
  return out;
}

std::vector<double> FarkasDenseLayer::effective_bias() const {
  std::vector<double> out(bias_.values());
  out.back() = aggregate_bias(bias_.data(), options_.aggregation, options_.cutoff, options_.epsilon);
  return out;
}

double FarkasDenseLayer::guaranteed_margin() const {
  const auto lambda = this->lambda();
  const auto b = effective_bias();
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += lambda[i] * b[i];
  return acc;
}

FarkasOutput FarkasDenseLayer::forward(Binding& binding, Var x) {
  Var w = binding.bind(weight_);
  Var b = binding.bind(bias_);
  return farkas_dense_forward(x, w, b, options_);
}

// ---------------------------------------------------------------------------

FarkasResidualBlock::FarkasResidualBlock(std::size_t in_features, std::size_t hidden, FarkasOptions options)
    : inner_(in_features, hidden, options), options_(options) {
  outer_weight_ = Tensor({in_features, hidden}, 0.0);
  outer_bias_ = Tensor({in_features + 1}, 0.0);
}

Tensor FarkasResidualBlock::envelope_weights() const {
  const std::size_t m = out_features(), h = hidden();
  Tensor out({m, h});
  for (std::size_t r = 0; r + 1 < m; ++r)
    for (std::size_t c = 0; c < h; ++c) out(r, c) = outer_weight_(r, c);
  const auto last = aggregate_rows(outer_weight_, options_.aggregation);
  for (std::size_t c = 0; c < h; ++c) out(m - 1, c) = last[c];
  return out;
}

std::vector<double> FarkasResidualBlock::envelope_bias() const {
  std::vector<double> out(outer_bias_.values());
  // Clamp threshold without the raw last bias: the per-row clamp is always
  // at least this large once Agg(x) is added back.
  const std::size_t head = out.size() - 1;
  out.back() = clamp_threshold(outer_bias_.data().first(head), options_.aggregation, options_.cutoff,
                               options_.epsilon);
  return out;
}

double FarkasResidualBlock::guaranteed_margin() const {
  const auto lambda = this->lambda();
  const auto b = envelope_bias();
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += lambda[i] * b[i];
  return acc;
}

FarkasOutput FarkasResidualBlock::forward(Binding& binding, Var x) {
  Var w1 = binding.bind(inner_.weight());
  Var b1 = binding.bind(inner_.bias());
  Var w2 = binding.bind(outer_weight_);
  Var b2 = binding.bind(outer_bias_);
  return farkas_residual_forward(x, w1, b1, w2, b2, options_);
}

std::vector<double> FarkasResidualBlock::row_margins(const Tensor& pre) const {
  const auto lambda = this->lambda();
  if (pre.cols() != lambda.size()) throw DimensionError("row_margins: width mismatch");
  std::vector<double> out(pre.rows(), 0.0);
  for (std::size_t r = 0; r < pre.rows(); ++r)
    for (std::size_t c = 0; c < pre.cols(); ++c) out[r] += lambda[c] * pre(r, c);
  return out;
}

}  // namespace farkasnet
