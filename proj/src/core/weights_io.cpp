#include "core/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "core/error.hpp"

namespace farkasnet {

namespace {

enum : std::uint8_t { kDense = 1, kFarkasDense = 2, kFarkasResidual = 3, kBatchNorm = 4, kActivation = 5 };

constexpr char kMagic[4] = {'F', 'K', 'N', 'W'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void options(const FarkasOptions& o) {
    u8(static_cast<std::uint8_t>(o.aggregation));
    u8(static_cast<std::uint8_t>(o.activation.kind));
    f64(o.activation.alpha);
    f64(o.cutoff);
    f64(o.epsilon);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw FormatError("weights file truncated", bytes_.size());
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  // Dimension field: positive and small enough that `per_unit` doubles per
  // unit could still fit in the rest of the file.
  std::size_t dim(const char* what) {
    const std::size_t at = pos_;
    const std::uint64_t v = u64();
    if (v == 0) throw FormatError(std::string(what) + " is zero", at);
    if (v > remaining() / 8 + 1) throw FormatError(std::string(what) + " exceeds the file size", at);
    return static_cast<std::size_t>(v);
  }
  void fill(std::span<double> out) {
    if (out.size() > remaining() / 8) throw FormatError("weights file truncated", bytes_.size());
    for (double& v : out) v = f64();
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    fill(v);
    return v;
  }
  FarkasOptions options() {
    FarkasOptions o;
    std::size_t at = pos_;
    const std::uint8_t agg = u8();
    if (agg > 1) throw FormatError("unknown aggregation tag " + std::to_string(agg), at);
    o.aggregation = static_cast<Aggregation>(agg);
    o.activation = activation();
    o.cutoff = f64();
    o.epsilon = f64();
    return o;
  }
  Activation activation() {
    const std::size_t at = pos_;
    const std::uint8_t kind = u8();
    if (kind > 2) throw FormatError("unknown activation tag " + std::to_string(kind), at);
    return Activation{static_cast<ActivationKind>(kind), f64()};
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::vector<std::uint8_t> encode_weights(const Network& network) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(network.layers().size()));
  for (const auto& layer : network.layers()) {
    std::visit(overloaded{
                   [&](const DenseLayer& l) {
                     w.u8(kDense);
                     w.u8(l.has_bias ? 1 : 0);
                     w.u64(l.weight.rows());
                     w.u64(l.weight.cols());
                     w.f64s(l.weight.data());
                     w.f64s(l.bias.data());
                   },
                   [&](const FarkasDenseLayer& l) {
                     w.u8(kFarkasDense);
                     w.options(l.options());
                     w.u64(l.in_features());
                     w.u64(l.out_features());
                     const auto lambda = l.lambda();
                     w.u64(lambda.size());
                     w.f64s(lambda);
                     w.f64s(l.weight().data());
                     w.f64s(l.bias().data());
                   },
                   [&](const FarkasResidualBlock& l) {
                     w.u8(kFarkasResidual);
                     w.options(l.options());
                     w.u64(l.in_features());
                     w.u64(l.hidden());
                     const auto lambda = l.lambda();
                     w.u64(lambda.size());
                     w.f64s(lambda);
                     w.f64s(l.inner().weight().data());
                     w.f64s(l.inner().bias().data());
                     w.f64s(l.outer_weight().data());
                     w.f64s(l.outer_bias().data());
                   },
                   [&](const BatchNormLayer& l) {
                     w.u8(kBatchNorm);
                     w.u64(l.features());
                     w.f64(l.momentum);
                     w.f64(l.eps);
                     w.f64s(l.gamma.data());
                     w.f64s(l.beta.data());
                     w.f64s(l.running_mean);
                     w.f64s(l.running_var);
                   },
                   [&](const ActivationLayer& l) {
                     w.u8(kActivation);
                     w.u8(static_cast<std::uint8_t>(l.activation.kind));
                     w.f64(l.activation.alpha);
                   },
               },
               layer);
  }
  return w.take();
}

WeightsFile decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4);
  for (char c : kMagic) {
    const std::size_t at = r.pos();
    if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad weights magic", at);
  }
  std::size_t at = r.pos();
  const std::uint32_t version = r.u32();
  if (version != kWeightsVersion) {
    throw FormatError("unsupported weights version " + std::to_string(version), at);
  }
  const std::uint32_t count = r.u32();

  std::vector<Layer> layers;
  StoredLambdas lambdas;
  for (std::uint32_t i = 0; i < count; ++i) {
    at = r.pos();
    const std::uint8_t kind = r.u8();
    std::vector<double> lambda;
    try {
      switch (kind) {
        case kDense: {
          const std::size_t flag_at = r.pos();
          const std::uint8_t has_bias = r.u8();
          if (has_bias > 1) throw FormatError("bad bias flag", flag_at);
          const std::size_t out = r.dim("dense output width");
          const std::size_t in = r.dim("dense input width");
          DenseLayer l{Tensor({out, in}), Tensor({out}), has_bias == 1};
          r.fill(l.weight.data());
          r.fill(l.bias.data());
          layers.emplace_back(std::move(l));
          break;
        }
        case kFarkasDense: {
          const FarkasOptions o = r.options();
          const std::size_t in = r.dim("Farkas input width");
          const std::size_t m = r.dim("Farkas output width");
          const std::size_t k_at = r.pos();
          const std::size_t k = r.dim("lambda length");
          if (k != m) throw FormatError("lambda length does not match the layer width", k_at);
          lambda = r.doubles(k);
          FarkasDenseLayer l(in, m, o);
          r.fill(l.weight().data());
          r.fill(l.bias().data());
          layers.emplace_back(std::move(l));
          break;
        }
        case kFarkasResidual: {
          const FarkasOptions o = r.options();
          const std::size_t in = r.dim("residual input width");
          const std::size_t hidden = r.dim("residual hidden width");
          const std::size_t k_at = r.pos();
          const std::size_t k = r.dim("lambda length");
          if (k != in + 1) throw FormatError("lambda length does not match the block width", k_at);
          lambda = r.doubles(k);
          FarkasResidualBlock l(in, hidden, o);
          r.fill(l.inner().weight().data());
          r.fill(l.inner().bias().data());
          r.fill(l.outer_weight().data());
          r.fill(l.outer_bias().data());
          layers.emplace_back(std::move(l));
          break;
        }
        case kBatchNorm: {
          const std::size_t f = r.dim("batchnorm width");
          const double momentum = r.f64();
          const double eps = r.f64();
          BatchNormLayer l(f, momentum, eps);
          r.fill(l.gamma.data());
          r.fill(l.beta.data());
          r.fill(l.running_mean);
          r.fill(l.running_var);
          layers.emplace_back(std::move(l));
          break;
        }
        case kActivation:
          layers.emplace_back(ActivationLayer{r.activation()});
          break;
        default:
          throw FormatError("unknown layer tag " + std::to_string(kind), at);
      }
    } catch (const SpecError& e) {
      throw FormatError(std::string("invalid layer: ") + e.what(), at);
    }
    lambdas.push_back(std::move(lambda));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last layer", r.pos());

  WeightsFile file;
  try {
    file.network = Network(std::move(layers));
  } catch (const SpecError& e) {
    throw FormatError(std::string("inconsistent layer widths: ") + e.what(), bytes.size());
  }
  file.lambdas = std::move(lambdas);
  return file;
}

void save_weights(const Network& network, const std::string& path) {
  const auto bytes = encode_weights(network);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

WeightsFile load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_weights(bytes);
}

}  // namespace farkasnet
