#include "core/network.hpp"

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace farkasnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::DefaultUniform:
      return "default_uniform";
    case InitKind::SymmetricNormal:
      return "symmetric_normal";
    case InitKind::AsymmetricPositiveBias:
      return "asymmetric_positive_bias";
    case InitKind::ZeroLastInBlock:
      return "zero_last_in_block";
  }
  return "?";
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "default_uniform") return InitKind::DefaultUniform;
  if (name == "symmetric_normal") return InitKind::SymmetricNormal;
  if (name == "asymmetric_positive_bias") return InitKind::AsymmetricPositiveBias;
  if (name == "zero_last_in_block") return InitKind::ZeroLastInBlock;
  throw SpecError("unknown init scheme '" + name + "'");
}

BatchNormLayer::BatchNormLayer(std::size_t features, double momentum_, double eps_)
    : gamma({features}, 1.0),
      beta({features}, 0.0),
      running_mean(features, 0.0),
      running_var(features, 1.0),
      momentum(momentum_),
      eps(eps_) {
  if (!(eps > 0.0)) throw SpecError("batch normalization eps must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw SpecError("batch normalization momentum must be in [0, 1]");
}

Var batchnorm_forward(BatchNormLayer& state, Binding& binding, Var y, Mode mode) {
  Var gamma = binding.bind(state.gamma);
  Var beta = binding.bind(state.beta);
  if (mode == Mode::Eval) {
    return batch_norm_infer(y, gamma, beta, state.running_mean, state.running_var, state.eps);
  }
  Var out = batch_norm_train(y, gamma, beta, state.eps);
  const Tensor& yv = y.value();
  const std::size_t batch = yv.rows();
  for (std::size_t c = 0; c < yv.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < batch; ++r) mean += yv(r, c);
    mean /= static_cast<double>(batch);
    double ss = 0.0;
    for (std::size_t r = 0; r < batch; ++r) ss += (yv(r, c) - mean) * (yv(r, c) - mean);
    const double unbiased = ss / static_cast<double>(batch - 1);
    state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean;
    state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t layer_output_width(const Layer& layer, std::size_t input_width) {
  return std::visit(overloaded{
                        [](const DenseLayer& l) { return l.weight.rows(); },
                        [](const FarkasDenseLayer& l) { return l.out_features(); },
                        [](const FarkasResidualBlock& l) { return l.out_features(); },
                        [&](const BatchNormLayer&) { return input_width; },
                        [&](const ActivationLayer&) { return input_width; },
                    },
                    layer);
}

std::string layer_kind_name(const Layer& layer) {
  return std::visit(overloaded{
                        [](const DenseLayer&) { return std::string("dense"); },
                        [](const FarkasDenseLayer&) { return std::string("farkas_dense"); },
                        [](const FarkasResidualBlock&) { return std::string("farkas_residual"); },
                        [](const BatchNormLayer&) { return std::string("batchnorm"); },
                        [](const ActivationLayer&) { return std::string("activation"); },
                    },
                    layer);
}

namespace {

std::optional<std::size_t> declared_input(const Layer& layer) {
  return std::visit(overloaded{
                        [](const DenseLayer& l) -> std::optional<std::size_t> { return l.weight.cols(); },
                        [](const FarkasDenseLayer& l) -> std::optional<std::size_t> { return l.in_features(); },
                        [](const FarkasResidualBlock& l) -> std::optional<std::size_t> { return l.in_features(); },
                        [](const BatchNormLayer& l) -> std::optional<std::size_t> { return l.features(); },
                        [](const ActivationLayer&) -> std::optional<std::size_t> { return std::nullopt; },
                    },
                    layer);
}

void check_chain(const std::vector<Layer>& layers) {
  std::optional<std::size_t> width;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto in = declared_input(layers[i]);
    if (width && in && *width != *in) {
      throw SpecError("layer " + std::to_string(i) + " (" + layer_kind_name(layers[i]) + ") expects " +
                      std::to_string(*in) + " inputs but receives " + std::to_string(*width));
    }
    if (!width) width = in;
    if (width) width = layer_output_width(layers[i], *width);
  }
}

Layer make_layer(const LayerSpec& spec) {
  return std::visit(overloaded{
                        [](const DenseSpec& s) -> Layer {
                          if (s.in == 0 || s.out == 0) throw SpecError("dense layer needs positive dimensions");
                          return DenseLayer{Tensor({s.out, s.in}, 0.0), Tensor({s.out}, 0.0), s.bias};
                        },
                        [](const FarkasDenseSpec& s) -> Layer {
                          return FarkasDenseLayer(s.in, s.out, s.options);
                        },
                        [](const FarkasResidualSpec& s) -> Layer {
                          if (s.in == 0) throw SpecError("residual block needs a positive input width");
                          return FarkasResidualBlock(s.in, s.hidden, s.options);
                        },
                        [](const BatchNormSpec& s) -> Layer {
                          if (s.features == 0) throw SpecError("batchnorm needs a positive width");
                          return BatchNormLayer(s.features, s.momentum, s.eps);
                        },
                        [](const ActivationSpec& s) -> Layer { return ActivationLayer{s.activation}; },
                    },
                    spec);
}

void validate_scheme(const InitScheme& scheme) {
  switch (scheme.kind) {
    case InitKind::SymmetricNormal:
      if (!(scheme.sigma > 0.0)) throw SpecError("symmetric_normal needs sigma > 0");
      break;
    case InitKind::AsymmetricPositiveBias:
      if (!(scheme.sigma_w > 0.0)) throw SpecError("asymmetric_positive_bias needs sigma_w > 0");
      if (!(scheme.bias_value > 0.0)) throw SpecError("asymmetric_positive_bias needs a positive bias");
      break;
    case InitKind::DefaultUniform:
    case InitKind::ZeroLastInBlock:
      break;
  }
}

// Draws one weight block and one bias block for a layer with fan-in `fan_in`.
// Weights and biases come from separate streams, so a Farkas layer and a
// plain layer of the same width share their first m-1 rows and biases.
void fill_weights(Tensor& w, const InitScheme& scheme, std::size_t fan_in, Rng rng) {
  switch (scheme.kind) {
    case InitKind::DefaultUniform:
    case InitKind::ZeroLastInBlock: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : w.data()) v = dist(rng);
      break;
    }
    case InitKind::SymmetricNormal: {
      std::normal_distribution<double> dist(0.0, scheme.sigma);
      for (auto& v : w.data()) v = dist(rng);
      break;
    }
    case InitKind::AsymmetricPositiveBias: {
      std::normal_distribution<double> dist(0.0, scheme.sigma_w);
      for (auto& v : w.data()) v = dist(rng);
      break;
    }
  }
}

void fill_bias(Tensor& b, const InitScheme& scheme, std::size_t fan_in, Rng rng) {
  switch (scheme.kind) {
    case InitKind::DefaultUniform:
    case InitKind::ZeroLastInBlock: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : b.data()) v = dist(rng);
      break;
    }
    case InitKind::SymmetricNormal:
      b.fill(0.0);
      break;
    case InitKind::AsymmetricPositiveBias:
      b.fill(scheme.bias_value);
      break;
  }
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { check_chain(layers_); }

Network Network::build(const NetworkSpec& spec) {
  std::vector<Layer> layers;
  layers.reserve(spec.layers.size());
  for (const auto& s : spec.layers) layers.push_back(make_layer(s));
  Network net(std::move(layers));
  net.init(spec.init, spec.seed);
  return net;
}

void Network::init(const InitScheme& scheme, std::uint64_t seed) {
  validate_scheme(scheme);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Rng layer_rng(seed, i);
    std::visit(overloaded{
                   [&](DenseLayer& l) {
                     fill_weights(l.weight, scheme, l.weight.cols(), layer_rng.split(0));
                     if (l.has_bias) {
                       fill_bias(l.bias, scheme, l.weight.cols(), layer_rng.split(1));
                     } else {
                       l.bias.fill(0.0);
                     }
                   },
                   [&](FarkasDenseLayer& l) {
                     fill_weights(l.weight(), scheme, l.in_features(), layer_rng.split(0));
                     fill_bias(l.bias(), scheme, l.in_features(), layer_rng.split(1));
                   },
                   [&](FarkasResidualBlock& l) {
                     fill_weights(l.inner().weight(), scheme, l.in_features(), layer_rng.split(0));
                     fill_bias(l.inner().bias(), scheme, l.in_features(), layer_rng.split(1));
                     fill_weights(l.outer_weight(), scheme, l.hidden(), layer_rng.split(2));
                     fill_bias(l.outer_bias(), scheme, l.hidden(), layer_rng.split(3));
                     if (scheme.kind == InitKind::ZeroLastInBlock) l.outer_weight().fill(0.0);
                   },
                   [&](BatchNormLayer& l) {
                     l.gamma.fill(1.0);
                     l.beta.fill(0.0);
                     std::fill(l.running_mean.begin(), l.running_mean.end(), 0.0);
                     std::fill(l.running_var.begin(), l.running_var.end(), 1.0);
                   },
                   [](ActivationLayer&) {},
               },
               layers_[i]);
  }
}

Var Network::forward(Binding& binding, Var x, Mode mode, std::vector<Var>* outputs) {
  if (x.value().rank() != 2) throw DimensionError("network input must be [batch x features]");
  if (auto in = input_dim(); in && x.value().cols() != *in) {
    throw DimensionError("network expects " + std::to_string(*in) + " input features, got " +
                         std::to_string(x.value().cols()));
  }
  Var h = x;
  for (auto& layer : layers_) {
    h = std::visit(overloaded{
                       [&](DenseLayer& l) {
                         Var w = binding.bind(l.weight);
                         Var y = matmul(h, transpose(w));
                         if (!l.has_bias) return y;
                         return add_bias(y, binding.bind(l.bias));
                       },
                       [&](FarkasDenseLayer& l) { return l.forward(binding, h).out; },
                       [&](FarkasResidualBlock& l) { return l.forward(binding, h).out; },
                       [&](BatchNormLayer& l) { return batchnorm_forward(l, binding, h, mode); },
                       [&](ActivationLayer& l) { return activate(h, l.activation); },
                   },
                   layer);
    if (outputs) outputs->push_back(h);
  }
  return h;
}

Tensor Network::predict(const Tensor& x) {
  Tape tape;
  Binding binding(tape);
  return forward(binding, binding.input(x), Mode::Eval).value();
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    std::visit(overloaded{
                   [&](DenseLayer& l) {
                     out.push_back(&l.weight);
                     if (l.has_bias) out.push_back(&l.bias);
                   },
                   [&](FarkasDenseLayer& l) {
                     out.push_back(&l.weight());
                     out.push_back(&l.bias());
                   },
                   [&](FarkasResidualBlock& l) {
                     out.push_back(&l.inner().weight());
                     out.push_back(&l.inner().bias());
                     out.push_back(&l.outer_weight());
                     out.push_back(&l.outer_bias());
                   },
                   [&](BatchNormLayer& l) {
                     out.push_back(&l.gamma);
                     out.push_back(&l.beta);
                   },
                   [](ActivationLayer&) {},
               },
               layer);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (auto* p : const_cast<Network*>(this)->parameters()) total += p->size();
  return total;
}

std::optional<std::size_t> Network::input_dim() const {
  for (const auto& layer : layers_) {
    if (auto in = declared_input(layer)) return in;
  }
  return std::nullopt;
}

std::optional<std::size_t> Network::output_dim() const {
  auto width = input_dim();
  if (!width) return std::nullopt;
  for (const auto& layer : layers_) width = layer_output_width(layer, *width);
  return width;
}

// ---------------------------------------------------------------------------

BornDeadResult is_born_dead(Network& network, const Tensor& probe) {
  Tape tape;
  Binding binding(tape);
  std::vector<Var> outputs;
  network.forward(binding, binding.input(probe), Mode::Eval, &outputs);

  const auto& layers = network.layers();
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::optional<std::size_t> post;  // entry holding the post-activation output
    if (std::holds_alternative<FarkasDenseLayer>(layers[i]) || std::holds_alternative<FarkasResidualBlock>(layers[i])) {
      post = i;
    } else if (std::holds_alternative<DenseLayer>(layers[i])) {
      for (std::size_t j = i + 1; j < layers.size(); ++j) {
        if (std::holds_alternative<ActivationLayer>(layers[j])) {
          post = j;
          break;
        }
        if (!std::holds_alternative<BatchNormLayer>(layers[j])) break;
      }
    } else {
      continue;
    }
    if (post) {
      const Tensor& v = outputs[*post].value();
      bool all_zero = true;
      for (double e : v.data()) {
        if (e != 0.0) {
          all_zero = false;
          break;
        }
      }
      if (all_zero) return {true, ordinal, *post};
    }
    ++ordinal;
  }
  return {};
}

}  // namespace farkasnet
