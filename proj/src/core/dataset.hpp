#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace farkasnet {

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;
};

struct Dataset {
  Tensor inputs;            // [N x n]
  std::vector<int> labels;  // N entries in [0, num_classes)
  std::size_t num_classes = 0;
  std::optional<FeatureStats> stats;  // set once standardized

  std::size_t size() const { return labels.size(); }
  std::size_t features() const { return inputs.cols(); }
};

using Point2 = std::array<double, 2>;

// Two Gaussian clouds, label 0 around center_a and label 1 around center_b.
// A zero std puts every point exactly on its center.
Dataset gen_two_clusters(std::uint64_t seed, std::size_t n_per_cluster, Point2 center_a, Point2 center_b,
                         double std);

// Concentric noisy rings in the plane, one class per radius.
Dataset gen_rings(std::uint64_t seed, std::size_t n_per_ring, std::span<const double> radii, double noise);

// IDX (big-endian) files: unsigned-byte tensors of any rank >= 1. Images
// are flattened per item and scaled to [0, 1].
Tensor load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Rows "label,feature_1,...,feature_n". A first line starting with a
// non-numeric field is treated as a header.
Dataset load_csv(const std::string& path);

FeatureStats compute_stats(const Tensor& inputs);
// Standardizes the features in place; zero-variance features keep std 1.
void apply_stats(Dataset& data, const FeatureStats& stats);

// Subset of rows, preserving order of `rows`.
Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

}  // namespace farkasnet
