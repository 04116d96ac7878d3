#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "core/tensor.hpp"

// Linear-programming checks of the "some unit is active" property of an
// affine layer z = W x + b.
namespace farkasnet::lp {

// W^T lambda = 0 is accepted when max_j |(W^T lambda)_j| <= kFeasibilityTol
// * max(1, max |W_ij|).
inline constexpr double kFeasibilityTol = 1e-8;

// Rows of `weights` are w_i^T; shape [m x n]. m = 1 is allowed.
struct Problem {
  Tensor weights;
  std::vector<double> bias;

  std::size_t rows() const { return bias.size(); }
  std::size_t cols() const { return weights.cols(); }
};

// Throws InputError on non-finite entries, DimensionError on shape mismatch.
void validate(const Problem& p);

enum class Status { Finite, UnboundedBelow };

struct Outcome {
  Status status = Status::Finite;
  double optimum = 0.0;            // p* when finite
  std::vector<double> argmin;      // x* when finite
  std::vector<double> ray;         // direction d with W d < 0 when unbounded
  std::optional<std::vector<double>> certificate;  // simplex point lambda, W^T lambda = 0
};

// p* = min_x max_i (w_i^T x + b_i), solved as min s s.t. W x + b <= s 1.
Outcome min_max_margin(const Problem& p);

// lambda^T b when lambda is on the simplex with W^T lambda = 0, -inf otherwise.
double dual_value(std::span<const double> lambda, const Problem& p);

// True iff lambda >= 0, W^T lambda = 0 and lambda^T b > 0. True implies
// W x + b <= 0 has no solution.
bool check_certificate(std::span<const double> lambda, const Problem& p);

// Oracle: min over a uniform grid on [-h, h]^n of max_i (w_i^T x + b_i).
// Only for n <= 3; throws UsageError otherwise.
double brute_force_margin(const Problem& p, double box_halfwidth, std::size_t grid_points_per_axis);

// Induced l-infinity norm: largest row l1 norm.
double inf_norm(const Tensor& a);

// {z >= 0 : A z + b = 0}.
struct StandardForm {
  Tensor matrix;
  std::vector<double> offset;
};

// W x + b <= 0 solvable  <=>  [W | -W | I] z + b = 0 has a solution z >= 0.
StandardForm farkas_feasibility_reduce(const Problem& p);

// A nonnegative solution of a standard-form system, if one exists.
std::optional<std::vector<double>> find_nonnegative_solution(const StandardForm& sf);

// ---------------------------------------------------------------------------
// Simplex engine: min c^T z s.t. A z = r, z >= 0.

enum class SimplexStatus { Optimal, Unbounded, Infeasible };

struct SimplexResult {
  SimplexStatus status = SimplexStatus::Optimal;
  std::vector<double> solution;
  double objective = 0.0;
  std::vector<double> reduced_costs;  // at the final basis, one per column
  std::vector<double> ray;            // improving direction when unbounded
};

// Two-phase tableau simplex with Bland's rule. With `phase_one_only` the
// cost vector is ignored and any feasible vertex is returned.
SimplexResult solve_standard_form(const Tensor& a, std::span<const double> rhs, std::span<const double> cost,
                                  bool phase_one_only = false);

// Phase 2 only, starting from a basis known to be feasible (one column per
// row). Throws UsageError when it is singular or infeasible.
SimplexResult solve_from_basis(const Tensor& a, std::span<const double> rhs, std::span<const double> cost,
                               std::span<const std::size_t> basis);

}  // namespace farkasnet::lp
