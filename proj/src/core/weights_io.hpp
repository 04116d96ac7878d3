#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/audit.hpp"
#include "core/network.hpp"

namespace farkasnet {

// Binary layout, little-endian throughout:
//   "FKNW"  u32 version (1)  u32 layer count
//   per layer: u8 kind, then
//     1 dense           u8 has_bias, u64 out, u64 in, f64 W[out*in], f64 b[out]
//     2 farkas_dense    options, u64 in, u64 m, u64 k, f64 lambda[k], f64 W[(m-1)*in], f64 b[m]
//     3 farkas_residual options, u64 in, u64 hidden, u64 k, f64 lambda[k],
//                       f64 W1[(hidden-1)*in], f64 b1[hidden], f64 W2[in*hidden], f64 b2[in+1]
//     4 batchnorm       u64 f, f64 momentum, f64 eps, f64 gamma[f], beta[f], mean[f], var[f]
//     5 activation      u8 act, f64 alpha
//   options: u8 agg, u8 act, f64 alpha, f64 cutoff, f64 epsilon
inline constexpr std::uint32_t kWeightsVersion = 1;

struct WeightsFile {
  Network network;
  StoredLambdas lambdas;  // one entry per layer, empty for non-Farkas layers
};

std::vector<std::uint8_t> encode_weights(const Network& network);
// Throws FormatError (with the byte offset) on bad magic, version, enum
// tags, dimensions, truncation or trailing bytes.
WeightsFile decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const Network& network, const std::string& path);
WeightsFile load_weights(const std::string& path);

}  // namespace farkasnet
