#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace farkasnet {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Only rank 1 and rank 2 are used; a
// rank-1 tensor of length k behaves as a single 1 x k row wherever an
// operation works row by row. Scalars have shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::vector<double> values);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const { return data().subspan(r * cols(), cols()); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double value);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
};

enum class OpKind {
  Leaf,
  MatMul,
  Transpose,
  AddBias,
  Add,
  Sub,
  Scale,
  AddScalar,
  Activate,
  ConcatLast,
  SliceLast,
  Reduce,
  Maximum,
  SumAll,
  SoftmaxCrossEntropy,
  BatchNormTrain,
  BatchNormInfer,
};

// Define-by-run reverse-mode tape. A fresh tape is built for every forward
// pass; nodes are appended in evaluation order, so the node list is already
// a topological order and backward() is a single reverse sweep.
//
// A tape is not thread safe. Independent tapes share nothing.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return node(v).value; }
  // Gradient after backward(). Zero-filled for nodes that received none.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  OpKind kind(Var v) const { return node(v).kind; }
  std::size_t size() const { return nodes_.size(); }

  void backward(Var loss);

  // Internal: used by operation implementations.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;
  Var record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn backward);
  void accumulate(Var target, const Tensor& g);

 private:
  struct Node {
    OpKind kind = OpKind::Leaf;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::deque<Node> nodes_;  // stable references while recording
};

// Records which parameter tensors were placed on a tape during a forward
// pass so that their gradients can be collected afterwards, in the same
// order the parameters were bound.
class Binding {
 public:
  explicit Binding(Tape& tape) : tape_(&tape) {}

  Tape& tape() { return *tape_; }
  Var bind(Tensor& parameter);
  Var input(Tensor value) { return tape_->constant(std::move(value)); }

  std::span<Tensor* const> parameters() const { return params_; }
  std::vector<Tensor> gradients() const;

 private:
  Tape* tape_;
  std::vector<Tensor*> params_;
  std::vector<Var> vars_;
};

enum class ActivationKind { Relu, Leaky, Elu };

struct Activation {
  ActivationKind kind = ActivationKind::Relu;
  double alpha = 0.0;  // slope for Leaky, saturation scale for Elu

  static Activation relu() { return {}; }
  static Activation leaky(double a) { return {ActivationKind::Leaky, a}; }
  static Activation elu(double a) { return {ActivationKind::Elu, a}; }

  double apply(double x) const;
  double derivative(double x) const;

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string to_string(ActivationKind kind);
ActivationKind parse_activation_kind(const std::string& name);

enum class Reduction { Sum, Mean };

// Differentiable operations. All inputs must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add_bias(Var y, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var activate(Var y, Activation act);
Var concat_last(Var a, Var s);
Var slice_last(Var a, std::size_t begin, std::size_t end);
Var reduce(Var y, Reduction mode);
// Elementwise max. On ties the gradient goes to b.
Var maximum(Var a, Var b);
Var sum_all(Var a);
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

// Per-feature batch normalization using the statistics of the batch itself.
Var batch_norm_train(Var y, Var gamma, Var beta, double eps);
// Normalization with fixed statistics (running mean / variance).
Var batch_norm_infer(Var y, Var gamma, Var beta, std::span<const double> mean,
                     std::span<const double> var, double eps);

}  // namespace farkasnet
