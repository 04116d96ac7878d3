#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/farkas.hpp"
#include "core/network.hpp"
#include "core/sgd.hpp"
#include "core/trainer.hpp"

namespace farkasnet {

// Runs body(0..count-1) on up to `jobs` threads. Exceptions are rethrown
// on the calling thread after all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Two clusters in the plane, one of them unseen by an adversarial init.

struct Toy2dConfig {
  std::uint64_t seed = 7;
  std::size_t n_per_cluster = 100;
  double std = 0.5;
  Point2 center_a{2.0, 2.0};
  Point2 center_b{-2.0, -2.0};
  bool swap_labels = false;          // label 0 goes to center_b
  double spread_degrees = 30.0;      // angle between each adversarial normal and the shared direction
  FarkasOptions farkas;
  SgdConfig sgd{0.01, 0.9, 5e-4, 200, 10, {}};  // schedule filled from epochs when empty
};

struct Toy2dReport {
  RunReport plain;
  RunReport farkas;
  double plain_accuracy = 0.0;   // final train accuracy
  double farkas_accuracy = 0.0;
  std::size_t farkas_first_perfect_epoch = 0;  // 0 when never reached
  std::size_t unobserved_at_init = 0;          // points where every plain unit is inactive
};

// Trainable rows shared by both nets: unit normals rotated by +-spread
// around -(c_B - c_A)/|c_B - c_A|, offsets so each hyperplane sits one unit
// past the midpoint, away from the unseen cluster.
Tensor toy2d_adversarial_weights(const Toy2dConfig& cfg);
std::vector<double> toy2d_adversarial_bias(const Toy2dConfig& cfg);

Dataset toy2d_data(const Toy2dConfig& cfg);
Toy2dReport run_toy2d(const Toy2dConfig& cfg);

// ---------------------------------------------------------------------------

struct BornDeadConfig {
  std::vector<std::size_t> depths{1, 2, 5, 10, 20, 30};
  std::size_t width = 2;
  std::size_t input_dim = 2;
  std::size_t trials = 200;
  std::size_t probes = 100;
  InitScheme init = InitScheme::symmetric_normal(1.0);
  FarkasOptions farkas;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct BornDeadRow {
  std::size_t depth = 0;
  std::size_t trials = 0;
  std::size_t plain_dead = 0;
  std::size_t farkas_dead = 0;
  std::size_t premise_holds = 0;  // trials whose first plain layer has min_i P(w_i x + b_i < 0) > 0
  double mean_premise_p = 0.0;    // average of that estimated minimum

  double plain_fraction() const { return trials ? double(plain_dead) / double(trials) : 0.0; }
  double farkas_fraction() const { return trials ? double(farkas_dead) / double(trials) : 0.0; }
};

NetworkSpec plain_stack_spec(std::size_t input_dim, std::size_t width, std::size_t depth, const InitScheme& init,
                             std::uint64_t seed);
NetworkSpec farkas_stack_spec(std::size_t input_dim, std::size_t width, std::size_t depth, const InitScheme& init,
                              const FarkasOptions& options, std::uint64_t seed);

std::vector<BornDeadRow> run_born_dead(const BornDeadConfig& cfg);

// ---------------------------------------------------------------------------

struct NormCheckConfig {
  std::size_t trials = 1000;
  std::size_t max_rows = 16;  // trainable rows m-1 drawn from [1, max_rows]
  std::size_t max_cols = 16;
  std::uint64_t seed = 3;
};

struct NormCheckReport {
  std::size_t trials = 0;
  std::size_t mean_weight_ok = 0;  // ||[W; -mean W]||_inf <= ||W||_inf
  std::size_t mean_bias_ok = 0;    // max |(b; -mean b)| <= max |b|
  std::size_t sum_weight_increased = 0;
  double worst_mean_ratio = 0.0;   // max ||A||_inf / ||W||_inf over mean trials
  double worst_sum_ratio = 0.0;
  // [[1, 0], [0, 1]] with sum aggregation gets the row (-1, -1).
  double counterexample_trainable_norm = 0.0;
  double counterexample_sum_norm = 0.0;
  double counterexample_mean_norm = 0.0;
};

NormCheckReport run_norm_stability(const NormCheckConfig& cfg);

// ---------------------------------------------------------------------------

struct DataConfig {
  std::string kind = "rings";  // rings, clusters, csv, idx
  std::size_t n_per_class = 200;
  std::vector<double> radii{1.0, 2.0, 3.0};
  double noise = 0.15;
  std::string train_path;        // csv file, or idx images
  std::string train_labels_path; // idx labels
  std::string test_path;
  std::string test_labels_path;
  double test_fraction = 0.25;   // held out when no test file is given
  bool standardize = false;
};

struct DataSplit {
  Dataset train;
  Dataset test;
};

// Generated data uses independent streams for train and test. File data
// without a test file is split after a seeded shuffle.
DataSplit load_data(const DataConfig& cfg, std::uint64_t seed);

enum class Variant { Plain, PlainBn, Farkas, FarkasBn };
std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

// Depth counts hidden weight layers; a dense read-out follows.
NetworkSpec mlp_spec(Variant variant, std::size_t input_dim, std::size_t width, std::size_t depth,
                     std::size_t classes, const InitScheme& init, const FarkasOptions& options,
                     std::uint64_t seed);

struct CompareConfig {
  DataConfig data;
  std::size_t depth = 8;
  std::size_t width = 16;
  std::vector<Variant> variants{Variant::Plain, Variant::PlainBn, Variant::Farkas, Variant::FarkasBn};
  std::vector<double> learning_rates{0.01, 0.1};
  InitScheme init = InitScheme::default_uniform();
  FarkasOptions farkas{Aggregation::Sum, 0.0, 1e-6, Activation::relu()};
  SgdConfig sgd{0.01, 0.9, 5e-4, 30, 32, {}};
  std::uint64_t seed = 11;
  std::size_t num_seeds = 10;
  unsigned jobs = 1;
};

struct CompareRun {
  Variant variant = Variant::Plain;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  RunReport report;
};

std::vector<CompareRun> run_small_compare(const CompareConfig& cfg);

}  // namespace farkasnet
