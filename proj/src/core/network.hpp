#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core/farkas.hpp"
#include "core/tensor.hpp"

namespace farkasnet {

struct DenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;
};

struct FarkasDenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  FarkasOptions options;
};

// Input width `in` (= m-1), hidden width `hidden`, output width in + 1.
struct FarkasResidualSpec {
  std::size_t in = 0;
  std::size_t hidden = 0;
  FarkasOptions options;
};

struct BatchNormSpec {
  std::size_t features = 0;
  double momentum = 0.1;
  double eps = 1e-5;
};

struct ActivationSpec {
  Activation activation;
};

using LayerSpec = std::variant<DenseSpec, FarkasDenseSpec, FarkasResidualSpec, BatchNormSpec, ActivationSpec>;

enum class InitKind { DefaultUniform, SymmetricNormal, AsymmetricPositiveBias, ZeroLastInBlock };

std::string to_string(InitKind kind);
InitKind parse_init_kind(const std::string& name);

struct InitScheme {
  InitKind kind = InitKind::DefaultUniform;
  double sigma = 1.0;         // SymmetricNormal weight std
  double sigma_w = 1.0;       // AsymmetricPositiveBias weight std
  double bias_value = 0.1;    // AsymmetricPositiveBias constant bias, > 0

  static InitScheme default_uniform() { return {}; }
  static InitScheme symmetric_normal(double s) { return {InitKind::SymmetricNormal, s, 1.0, 0.1}; }
  static InitScheme asymmetric_positive_bias(double sw, double b0) {
    return {InitKind::AsymmetricPositiveBias, 1.0, sw, b0};
  }
  static InitScheme zero_last_in_block() { return {InitKind::ZeroLastInBlock, 1.0, 1.0, 0.1}; }
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  InitScheme init;
  std::uint64_t seed = 0;
};

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]; held at zero and not trained when has_bias is false
  bool has_bias = true;
};

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormLayer(std::size_t features = 1, double momentum = 0.1, double eps = 1e-5);
  std::size_t features() const { return gamma.size(); }
};

struct ActivationLayer {
  Activation activation;
};

using Layer = std::variant<DenseLayer, FarkasDenseLayer, FarkasResidualBlock, BatchNormLayer, ActivationLayer>;

enum class Mode { Train, Eval };

// Batch normalization with running-statistics bookkeeping. In Train mode the
// batch statistics normalize and are folded into the running averages.
Var batchnorm_forward(BatchNormLayer& state, Binding& binding, Var y, Mode mode);

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  // Validates the dimension chain, constructs the layers and initializes
  // them from spec.init and spec.seed. Throws SpecError.
  static Network build(const NetworkSpec& spec);

  void init(const InitScheme& scheme, std::uint64_t seed);

  // Binds every parameter on the binding's tape (in parameters() order) and
  // runs the layers. When `outputs` is given it receives one Var per layer.
  Var forward(Binding& binding, Var x, Mode mode, std::vector<Var>* outputs = nullptr);

  // Eval-mode forward without gradients.
  Tensor predict(const Tensor& x);

  std::vector<Tensor*> parameters();
  std::size_t parameter_count() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }

  std::optional<std::size_t> input_dim() const;
  std::optional<std::size_t> output_dim() const;

 private:
  std::vector<Layer> layers_;
};

// Output width of a layer given its input width (activation and batchnorm
// keep the width).
std::size_t layer_output_width(const Layer& layer, std::size_t input_width);
std::string layer_kind_name(const Layer& layer);

struct BornDeadResult {
  bool dead = false;
  std::size_t layer = 0;  // ordinal among the weight layers (dense/Farkas/residual)
  std::size_t entry = 0;  // index into Network::layers() of the zero output
};

// A network is born dead on a probe set when some weight layer's
// post-activation output is exactly zero for every probe row. Weight layers
// with no activation after them (linear read-outs) are not considered.
BornDeadResult is_born_dead(Network& network, const Tensor& probe);

}  // namespace farkasnet
