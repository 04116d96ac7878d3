#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace farkasnet {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("tensors must have rank 1 or 2, got " + shape_string(shape));
  }
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("zero extent in shape " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (product(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw DimensionError("matrix needs at least one row");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

// ---------------------------------------------------------------------------
// Tape

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape != this) throw UsageError("operands live on different tapes");
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) {
    // Lazily materialize a zero gradient with the right shape.
    auto& mutable_node = const_cast<Node&>(n);
    mutable_node.grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

void Tape::accumulate(Var target, const Tensor& g) {
  Node& n = node(target);
  if (!n.requires_grad) return;
  if (g.size() != n.value.size()) {
    throw DimensionError("gradient shape " + shape_string(g.shape()) + " does not match value " +
                         shape_string(n.value.shape()));
  }
  if (n.grad.size() == 0) {
    n.grad = Tensor(n.value.shape(), 0.0);
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var loss) {
  const Node& l = node(loss);
  if (l.value.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_string(l.value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (!l.requires_grad) return;
  nodes_[loss.id].grad = Tensor(l.value.shape(), 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    // Copy: backward rules may append to other nodes' gradients only, but the
    // closure must not observe its own gradient changing underneath it.
    const Tensor out_grad = n.grad;
    n.backward(*this, out_grad);
  }
}

// ---------------------------------------------------------------------------
// Binding

Var Binding::bind(Tensor& parameter) {
  Var v = tape_->leaf(parameter, true);
  params_.push_back(&parameter);
  vars_.push_back(v);
  return v;
}

std::vector<Tensor> Binding::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const Var& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

// ---------------------------------------------------------------------------
// Activations

double Activation::apply(double x) const {
  switch (kind) {
    case ActivationKind::Relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::Leaky:
      return x > 0.0 ? x : alpha * x;
    case ActivationKind::Elu:
      return x > 0.0 ? x : alpha * std::expm1(x);
  }
  return x;
}

// Subgradient at 0 takes the left branch, so a ReLU unit sitting exactly at
// zero counts as dead.
double Activation::derivative(double x) const {
  switch (kind) {
    case ActivationKind::Relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Leaky:
      return x > 0.0 ? 1.0 : alpha;
    case ActivationKind::Elu:
      return x > 0.0 ? 1.0 : alpha * std::exp(x);
  }
  return 1.0;
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Relu:
      return "relu";
    case ActivationKind::Leaky:
      return "leaky";
    case ActivationKind::Elu:
      return "elu";
  }
  return "?";
}

ActivationKind parse_activation_kind(const std::string& name) {
  if (name == "relu") return ActivationKind::Relu;
  if (name == "leaky") return ActivationKind::Leaky;
  if (name == "elu") return ActivationKind::Elu;
  throw SpecError("unknown activation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Tape& tape_of(Var a) {
  if (!a.tape) throw UsageError("variable is not attached to a tape");
  return *a.tape;
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw UsageError("operands live on different tapes");
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

Tensor matmul_values(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) throw DimensionError("matmul inner dimensions disagree");
  Tensor out({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = transpose_a ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out(i, j) += av * (transpose_b ? b(j, p) : b(p, j));
      }
    }
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out = matmul_values(av, bv, false, false);
  return t.record(OpKind::MatMul, std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) tape.accumulate(a, matmul_values(g, tape.value(b), false, true));
    if (tape.requires_grad(b)) tape.accumulate(b, matmul_values(tape.value(a), g, true, false));
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2(av, "transpose");
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = av(i, j);
  return t.record(OpKind::Transpose, std::move(out), {a}, [a, r, c](Tape& tape, const Tensor& g) {
    Tensor ga({r, c});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) = g(j, i);
    tape.accumulate(a, ga);
  });
}

Var add_bias(Var y, Var b) {
  require_same_tape(y, b);
  Tape& t = tape_of(y);
  const Tensor& yv = y.value();
  const Tensor& bv = b.value();
  require_rank2(yv, "add_bias");
  if (bv.rank() != 1 || bv.size() != yv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " for rows of " +
                         shape_string(yv.shape()));
  }
  Tensor out = yv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  return t.record(OpKind::AddBias, std::move(out), {y, b}, [y, b](Tape& tape, const Tensor& g) {
    tape.accumulate(y, g);
    if (tape.requires_grad(b)) {
      Tensor gb({g.cols()}, 0.0);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      tape.accumulate(b, gb);
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("add " + shape_string(a.value().shape()) + " + " + shape_string(b.value().shape()));
  }
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.record(OpKind::Add, std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("sub " + shape_string(a.value().shape()) + " - " + shape_string(b.value().shape()));
  }
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.record(OpKind::Sub, std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    if (tape.requires_grad(b)) {
      Tensor neg = g;
      for (auto& v : neg.data()) v = -v;
      tape.accumulate(b, neg);
    }
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  return t.record(OpKind::Scale, std::move(out), {a}, [a, factor](Tape& tape, const Tensor& g) {
    Tensor ga = g;
    for (auto& v : ga.data()) v *= factor;
    tape.accumulate(a, ga);
  });
}

Var add_scalar(Var a, double offset) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.data()) v += offset;
  return t.record(OpKind::AddScalar, std::move(out), {a}, [a](Tape& tape, const Tensor& g) { tape.accumulate(a, g); });
}

Var activate(Var y, Activation act) {
  Tape& t = tape_of(y);
  Tensor out = y.value();
  for (auto& v : out.data()) v = act.apply(v);
  return t.record(OpKind::Activate, std::move(out), {y}, [y, act](Tape& tape, const Tensor& g) {
    const Tensor& x = tape.value(y);
    Tensor gy = g;
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] *= act.derivative(x[i]);
    tape.accumulate(y, gy);
  });
}

Var concat_last(Var a, Var s) {
  require_same_tape(a, s);
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& sv = s.value();
  if (av.rank() != sv.rank() || av.rows() != sv.rows()) {
    throw DimensionError("concat_last " + shape_string(av.shape()) + " with " + shape_string(sv.shape()));
  }
  const std::size_t rows = av.rows(), ca = av.cols(), cs = sv.cols();
  Shape shape = av.rank() == 2 ? Shape{rows, ca + cs} : Shape{ca + cs};
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < cs; ++c) out(r, ca + c) = sv(r, c);
  }
  Shape a_shape = av.shape(), s_shape = sv.shape();
  return t.record(OpKind::ConcatLast, std::move(out), {a, s},
                  [a, s, rows, ca, cs, a_shape, s_shape](Tape& tape, const Tensor& g) {
                    Tensor ga(a_shape), gs(s_shape);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t c = 0; c < ca; ++c) ga(r, c) = g(r, c);
                      for (std::size_t c = 0; c < cs; ++c) gs(r, c) = g(r, ca + c);
                    }
                    tape.accumulate(a, ga);
                    tape.accumulate(s, gs);
                  });
}

Var slice_last(Var a, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (begin >= end || end > av.cols()) {
    throw DimensionError("slice_last [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                         shape_string(av.shape()));
  }
  const std::size_t rows = av.rows(), width = end - begin;
  Shape shape = av.rank() == 2 ? Shape{rows, width} : Shape{width};
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = av(r, begin + c);
  Shape a_shape = av.shape();
  return t.record(OpKind::SliceLast, std::move(out), {a}, [a, a_shape, begin, width, rows](Tape& tape, const Tensor& g) {
    Tensor ga(a_shape, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) ga(r, begin + c) = g(r, c);
    tape.accumulate(a, ga);
  });
}

Var reduce(Var y, Reduction mode) {
  Tape& t = tape_of(y);
  const Tensor& yv = y.value();
  const std::size_t rows = yv.rows(), k = yv.cols();
  const double weight = mode == Reduction::Mean ? 1.0 / static_cast<double>(k) : 1.0;
  Shape shape = yv.rank() == 2 ? Shape{rows, 1} : Shape{1};
  Tensor out(shape, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) acc += yv(r, c);
    out[r] = acc * weight;
  }
  Shape y_shape = yv.shape();
  return t.record(OpKind::Reduce, std::move(out), {y}, [y, y_shape, rows, k, weight](Tape& tape, const Tensor& g) {
    Tensor gy(y_shape);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < k; ++c) gy(r, c) = g[r] * weight;
    tape.accumulate(y, gy);
  });
}

Var maximum(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw DimensionError("maximum " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  Tensor out = av;
  std::vector<bool> take_a(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    take_a[i] = av[i] > bv[i];
    out[i] = take_a[i] ? av[i] : bv[i];
  }
  return t.record(OpKind::Maximum, std::move(out), {a, b}, [a, b, take_a](Tape& tape, const Tensor& g) {
    Tensor ga(g.shape(), 0.0), gb(g.shape(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) (take_a[i] ? ga : gb)[i] = g[i];
    tape.accumulate(a, ga);
    tape.accumulate(b, gb);
  });
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  double acc = 0.0;
  for (double v : av.data()) acc += v;
  Shape a_shape = av.shape();
  return t.record(OpKind::SumAll, Tensor::scalar(acc), {a}, [a, a_shape](Tape& tape, const Tensor& g) {
    tape.accumulate(a, Tensor(a_shape, g[0]));
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& t = tape_of(logits);
  const Tensor& lv = logits.value();
  require_rank2(lv, "softmax_cross_entropy");
  const std::size_t batch = lv.rows(), classes = lv.cols();
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  }
  Tensor probs({batch, classes});
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
    double top = lv(r, 0);
    for (std::size_t c = 1; c < classes; ++c) top = std::max(top, lv(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(lv(r, c) - top);
    const double log_z = std::log(z);
    for (std::size_t c = 0; c < classes; ++c) probs(r, c) = std::exp(lv(r, c) - top - log_z);
    loss -= lv(r, static_cast<std::size_t>(label)) - top - log_z;
  }
  loss /= static_cast<double>(batch);
  std::vector<int> saved(labels.begin(), labels.end());
  return t.record(OpKind::SoftmaxCrossEntropy, Tensor::scalar(loss), {logits},
                  [logits, probs = std::move(probs), saved = std::move(saved)](Tape& tape, const Tensor& g) {
                    Tensor gl = probs;
                    const double inv = g[0] / static_cast<double>(gl.rows());
                    for (std::size_t r = 0; r < gl.rows(); ++r) {
                      gl(r, static_cast<std::size_t>(saved[r])) -= 1.0;
                      for (std::size_t c = 0; c < gl.cols(); ++c) gl(r, c) *= inv;
                    }
                    tape.accumulate(logits, gl);
                  });
}

namespace {

void check_batch_norm_args(const Tensor& y, const Tensor& gamma, const Tensor& beta) {
  require_rank2(y, "batch_norm");
  if (gamma.rank() != 1 || beta.rank() != 1 || gamma.size() != y.cols() || beta.size() != y.cols()) {
    throw DimensionError("batch_norm: scale/shift must have " + std::to_string(y.cols()) + " entries");
  }
}

}  // namespace

Var batch_norm_train(Var y, Var gamma, Var beta, double eps) {
  require_same_tape(y, gamma);
  require_same_tape(y, beta);
  Tape& t = tape_of(y);
  const Tensor& yv = y.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  check_batch_norm_args(yv, gv, bv);
  const std::size_t batch = yv.rows(), features = yv.cols();
  if (batch < 2) throw UsageError("batch normalization in training mode needs a batch of at least 2");

  Tensor normalized({batch, features});
  std::vector<double> inv_std(features);
  Tensor out({batch, features});
  for (std::size_t c = 0; c < features; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < batch; ++r) mean += yv(r, c);
    mean /= static_cast<double>(batch);
    double var = 0.0;
    for (std::size_t r = 0; r < batch; ++r) var += (yv(r, c) - mean) * (yv(r, c) - mean);
    var /= static_cast<double>(batch);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t r = 0; r < batch; ++r) {
      normalized(r, c) = (yv(r, c) - mean) * inv_std[c];
      out(r, c) = gv[c] * normalized(r, c) + bv[c];
    }
  }
  return t.record(
      OpKind::BatchNormTrain, std::move(out), {y, gamma, beta},
      [y, gamma, beta, normalized = std::move(normalized), inv_std = std::move(inv_std)](Tape& tape, const Tensor& g) {
        const std::size_t batch = g.rows(), features = g.cols();
        const Tensor& gv = tape.value(gamma);
        Tensor gy({batch, features}), gg({features}, 0.0), gb({features}, 0.0);
        const double n = static_cast<double>(batch);
        for (std::size_t c = 0; c < features; ++c) {
          double sum_g = 0.0, sum_g_xhat = 0.0;
          for (std::size_t r = 0; r < batch; ++r) {
            sum_g += g(r, c);
            sum_g_xhat += g(r, c) * normalized(r, c);
          }
          gb[c] = sum_g;
          gg[c] = sum_g_xhat;
          for (std::size_t r = 0; r < batch; ++r) {
            gy(r, c) = gv[c] * inv_std[c] / n * (n * g(r, c) - sum_g - normalized(r, c) * sum_g_xhat);
          }
        }
        tape.accumulate(y, gy);
        tape.accumulate(gamma, gg);
        tape.accumulate(beta, gb);
      });
}

Var batch_norm_infer(Var y, Var gamma, Var beta, std::span<const double> mean, std::span<const double> var,
                     double eps) {
  require_same_tape(y, gamma);
  require_same_tape(y, beta);
  Tape& t = tape_of(y);
  const Tensor& yv = y.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  check_batch_norm_args(yv, gv, bv);
  const std::size_t batch = yv.rows(), features = yv.cols();
  if (mean.size() != features || var.size() != features) {
    throw DimensionError("batch_norm: running statistics must have " + std::to_string(features) + " entries");
  }
  Tensor normalized({batch, features}), out({batch, features});
  std::vector<double> inv_std(features);
  for (std::size_t c = 0; c < features; ++c) {
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    for (std::size_t r = 0; r < batch; ++r) {
      normalized(r, c) = (yv(r, c) - mean[c]) * inv_std[c];
      out(r, c) = gv[c] * normalized(r, c) + bv[c];
    }
  }
  return t.record(
      OpKind::BatchNormInfer, std::move(out), {y, gamma, beta},
      [y, gamma, beta, normalized = std::move(normalized), inv_std = std::move(inv_std)](Tape& tape, const Tensor& g) {
        const std::size_t batch = g.rows(), features = g.cols();
        const Tensor& gv = tape.value(gamma);
        Tensor gy({batch, features}), gg({features}, 0.0), gb({features}, 0.0);
        for (std::size_t c = 0; c < features; ++c) {
          for (std::size_t r = 0; r < batch; ++r) {
            gy(r, c) = g(r, c) * gv[c] * inv_std[c];
            gg[c] += g(r, c) * normalized(r, c);
            gb[c] += g(r, c);
          }
        }
        tape.accumulate(y, gy);
        tape.accumulate(gamma, gg);
        tape.accumulate(beta, gb);
      });
}

}  // namespace farkasnet
