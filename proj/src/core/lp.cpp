#include "core/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace farkasnet::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr double kPhaseOneTol = 1e-9;
constexpr std::size_t kMaxPivots = 200000;

// Dense tableau. Row i holds B^-1 A and B^-1 r in the last column; `cost`
// holds the reduced costs c_j - c_B^T B^-1 A_j.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_(rows * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return t_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double rhs(std::size_t i) const { return at(i, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc, std::vector<double>& cost, double& objective) {
    const double p = at(pr, pc);
    for (std::size_t j = 0; j <= cols_; ++j) at(pr, j) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == pr) continue;
      const double f = at(i, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(pr, j);
      at(i, pc) = 0.0;
    }
    const double f = cost[pc];
    if (f != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) cost[j] -= f * at(pr, j);
      objective -= f * rhs(pr);  // objective tracks -c_B^T B^-1 r
      cost[pc] = 0.0;
    }
    basis[pr] = pc;
  }

  void drop_row(std::size_t r) {
    t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)),
             t_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (cols_ + 1)));
    basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

  std::vector<std::size_t> basis;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> t_;
};

enum class IterateResult { Optimal, Unbounded };

// Bland's rule: lowest-index improving column enters; ratio ties leave by
// lowest basic variable index.
IterateResult iterate(Tableau& tab, std::vector<double>& cost, double& objective, std::size_t allowed_cols,
                      std::size_t& entering_out) {
  for (std::size_t it = 0; it < kMaxPivots; ++it) {
    std::size_t entering = allowed_cols;
    for (std::size_t j = 0; j < allowed_cols; ++j) {
      if (cost[j] < -kCostTol) {
        entering = j;
        break;
      }
    }
    if (entering == allowed_cols) return IterateResult::Optimal;

    std::size_t leaving = tab.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tab.rows(); ++i) {
      const double a = tab.at(i, entering);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(tab.rhs(i), 0.0) / a;
      if (leaving == tab.rows() || ratio < best - 1e-12) {
        best = ratio;
        leaving = i;
      } else if (std::abs(ratio - best) <= 1e-12 && tab.basis[i] < tab.basis[leaving]) {
        best = std::min(best, ratio);
        leaving = i;
      }
    }
    if (leaving == tab.rows()) {
      entering_out = entering;
      return IterateResult::Unbounded;
    }
    tab.pivot(leaving, entering, cost, objective);
  }
  throw Error("simplex did not terminate within the pivot limit");
}

// Phase 2 from the tableau's current (feasible) basis. Columns >= n are
// artificials and never enter.
SimplexResult phase_two(Tableau& tab, std::size_t n, std::span<const double> cost) {
  std::vector<double> reduced(tab.cols(), 0.0);
  double objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) reduced[j] = cost[j];
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    const double cb = cost[tab.basis[i]];
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) reduced[j] -= cb * tab.at(i, j);
    objective -= cb * tab.rhs(i);
  }

  SimplexResult result;
  auto extract = [&] {
    result.solution.assign(n, 0.0);
    for (std::size_t i = 0; i < tab.rows(); ++i) {
      if (tab.basis[i] < n) result.solution[tab.basis[i]] = std::max(tab.rhs(i), 0.0);
    }
  };
  std::size_t entering = 0;
  if (iterate(tab, reduced, objective, n, entering) == IterateResult::Unbounded) {
    result.status = SimplexStatus::Unbounded;
    extract();
    result.ray.assign(n, 0.0);
    result.ray[entering] = 1.0;
    for (std::size_t i = 0; i < tab.rows(); ++i) {
      if (tab.basis[i] < n) result.ray[tab.basis[i]] = -tab.at(i, entering);
    }
    return result;
  }
  result.status = SimplexStatus::Optimal;
  extract();
  result.reduced_costs.assign(reduced.begin(), reduced.begin() + static_cast<std::ptrdiff_t>(n));
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += cost[j] * result.solution[j];
  result.objective = obj;
  return result;
}

}  // namespace

SimplexResult solve_standard_form(const Tensor& a, std::span<const double> rhs, std::span<const double> cost,
                                  bool phase_one_only) {
  if (a.rank() != 2) throw DimensionError("constraint matrix must be rank 2");
  const std::size_t m = a.rows(), n = a.cols();
  if (rhs.size() != m) throw DimensionError("right-hand side length mismatch");
  if (!phase_one_only && cost.size() != n) throw DimensionError("cost vector length mismatch");

  // Columns: n structural, then one artificial per row.
  Tableau tab(m, n + m);
  tab.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * a(i, j);
    tab.at(i, n + i) = 1.0;
    tab.rhs(i) = sign * rhs[i];
    tab.basis[i] = n + i;
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<double> reduced(n + m, 0.0);
  double objective = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) reduced[j] -= tab.at(i, j);
    objective -= tab.rhs(i);
  }
  std::size_t entering = 0;
  iterate(tab, reduced, objective, n, entering);  // bounded below by 0

  SimplexResult result;
  double rhs_scale = 1.0;
  for (double v : rhs) rhs_scale = std::max(rhs_scale, std::abs(v));
  if (-objective > kPhaseOneTol * rhs_scale * std::max(1.0, static_cast<double>(m))) {
    result.status = SimplexStatus::Infeasible;
    return result;
  }

  // Drive remaining artificials out of the basis; drop redundant rows.
  for (std::size_t i = 0; i < tab.rows();) {
    if (tab.basis[i] < n) {
      ++i;
      continue;
    }
    std::size_t col = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(tab.at(i, j)) > kPivotTol) {
        col = j;
        break;
      }
    }
    if (col == n) {
      tab.drop_row(i);
    } else {
      std::vector<double> scratch(n + m, 0.0);
      double unused = 0.0;
      tab.pivot(i, col, scratch, unused);
      ++i;
    }
  }

  auto extract = [&](SimplexResult& r) {
    r.solution.assign(n, 0.0);
    for (std::size_t i = 0; i < tab.rows(); ++i) {
      if (tab.basis[i] < n) r.solution[tab.basis[i]] = std::max(tab.rhs(i), 0.0);
    }
  };

  if (phase_one_only) {
    extract(result);
    return result;
  }

  return phase_two(tab, n, cost);
}

SimplexResult solve_from_basis(const Tensor& a, std::span<const double> rhs, std::span<const double> cost,
                               std::span<const std::size_t> basis) {
  if (a.rank() != 2) throw DimensionError("constraint matrix must be rank 2");
  const std::size_t m = a.rows(), n = a.cols();
  if (rhs.size() != m || basis.size() != m) throw DimensionError("right-hand side or basis length mismatch");
  if (cost.size() != n) throw DimensionError("cost vector length mismatch");

  Tableau tab(m, n);
  tab.basis.assign(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = a(i, j);
    tab.rhs(i) = rhs[i];
  }
  std::vector<double> scratch(n, 0.0);
  double unused = 0.0;
  double rhs_scale = 1.0;
  for (double v : rhs) rhs_scale = std::max(rhs_scale, std::abs(v));
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= n || std::abs(tab.at(i, basis[i])) <= kPivotTol) {
      throw UsageError("initial basis is singular");
    }
    tab.pivot(i, basis[i], scratch, unused);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.rhs(i) < -kPhaseOneTol * rhs_scale) throw UsageError("initial basis is not feasible");
  }
  return phase_two(tab, n, cost);
}

// ---------------------------------------------------------------------------

void validate(const Problem& p) {
  if (p.weights.rank() != 2) throw DimensionError("LP weights must be a matrix");
  if (p.weights.rows() != p.bias.size()) {
    throw DimensionError("LP has " + std::to_string(p.weights.rows()) + " rows but " +
                         std::to_string(p.bias.size()) + " bias entries");
  }
  for (double v : p.weights.data()) {
    if (!std::isfinite(v)) throw InputError("LP weights contain a non-finite entry");
  }
  for (double v : p.bias) {
    if (!std::isfinite(v)) throw InputError("LP bias contains a non-finite entry");
  }
}

namespace {

double max_row_value(const Problem& p, std::span<const double> x) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double v = p.bias[i];
    for (std::size_t j = 0; j < p.cols(); ++j) v += p.weights(i, j) * x[j];
    best = std::max(best, v);
  }
  return best;
}

// max_j |(W^T lambda)_j| / max(1, max |W|)
double transpose_residual(std::span<const double> lambda, const Problem& p) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) acc += p.weights(i, j) * lambda[i];
    worst = std::max(worst, std::abs(acc));
  }
  double scale = 1.0;
  for (double v : p.weights.data()) scale = std::max(scale, std::abs(v));
  return worst / scale;
}

}  // namespace

Outcome min_max_margin(const Problem& p) {
  validate(p);
  const std::size_t m = p.rows(), n = p.cols();
  // p* scales with (W, b) while x* and lambda do not, so solve the problem
  // divided by its largest entry.
  double scale = 0.0;
  for (double v : p.weights.data()) scale = std::max(scale, std::abs(v));
  for (double v : p.bias) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;

  // Variables: x+ (n), x- (n), s+, s-, slack (m).
  // Row i: w_i x+ - w_i x- - s+ + s- + t_i = -b_i.
  const std::size_t cols = 2 * n + 2 + m;
  Tensor a({m, cols}, 0.0);
  std::vector<double> rhs(m), cost(cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = p.weights(i, j) / scale;
      a(i, n + j) = -p.weights(i, j) / scale;
    }
    a(i, 2 * n) = -1.0;
    a(i, 2 * n + 1) = 1.0;
    a(i, 2 * n + 2 + i) = 1.0;
    rhs[i] = -p.bias[i] / scale;
  }
  cost[2 * n] = 1.0;
  cost[2 * n + 1] = -1.0;

  // Start at x = 0, s = max_i b_i: the slot of the largest bias goes to s+
  // (or s- when that bias is negative), every other row keeps its slack.
  std::size_t top = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (p.bias[i] > p.bias[top]) top = i;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = 2 * n + 2 + i;
  basis[top] = p.bias[top] >= 0.0 ? 2 * n : 2 * n + 1;

  const SimplexResult sr = solve_from_basis(a, rhs, cost, basis);
  Outcome out;
  if (sr.status == SimplexStatus::Unbounded) {
    out.status = Status::UnboundedBelow;
    out.optimum = -std::numeric_limits<double>::infinity();
    out.ray.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.ray[j] = sr.ray[j] - sr.ray[n + j];
    return out;
  }

  out.status = Status::Finite;
  out.argmin.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.argmin[j] = sr.solution[j] - sr.solution[n + j];
  out.optimum = max_row_value(p, out.argmin);

  // The reduced cost of slack column i is the dual multiplier lambda_i.
  std::vector<double> lambda(m);
  bool nonnegative = true;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double v = sr.reduced_costs[2 * n + 2 + i];
    if (v < 0.0 && v > -1e-9) v = 0.0;
    if (v < 0.0) nonnegative = false;
    lambda[i] = v;
    total += v;
  }
  if (nonnegative && total > 0.0) {
    for (auto& v : lambda) v /= total;
    if (transpose_residual(lambda, p) <= kFeasibilityTol) out.certificate = std::move(lambda);
  }
  return out;
}

double dual_value(std::span<const double> lambda, const Problem& p) {
  validate(p);
  if (lambda.size() != p.rows()) throw DimensionError("dual multiplier length mismatch");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double total = 0.0, value = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda[i]) || lambda[i] < -1e-12) return kNegInf;
    total += lambda[i];
    value += lambda[i] * p.bias[i];
  }
  if (std::abs(total - 1.0) > kFeasibilityTol) return kNegInf;
  if (transpose_residual(lambda, p) > kFeasibilityTol) return kNegInf;
  return value;
}

bool check_certificate(std::span<const double> lambda, const Problem& p) {
  validate(p);
  if (lambda.size() != p.rows()) return false;
  double value = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda[i]) || lambda[i] < -1e-12) return false;
    value += lambda[i] * p.bias[i];
  }
  return transpose_residual(lambda, p) <= kFeasibilityTol && value > 0.0;
}

double brute_force_margin(const Problem& p, double box_halfwidth, std::size_t grid_points_per_axis) {
  validate(p);
  const std::size_t n = p.cols();
  if (n > 3) throw UsageError("brute_force_margin supports at most 3 input dimensions");
  if (grid_points_per_axis == 0) throw UsageError("grid needs at least one point per axis");
  const std::size_t g = grid_points_per_axis;
  auto coord = [&](std::size_t k) {
    if (g == 1) return 0.0;
    return -box_halfwidth + 2.0 * box_halfwidth * static_cast<double>(k) / static_cast<double>(g - 1);
  };
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= g;

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t d = 0; d < n; ++d) {
      x[d] = coord(rem % g);
      rem /= g;
    }
    best = std::min(best, max_row_value(p, x));
  }
  return best;
}

double inf_norm(const Tensor& a) {
  double best = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (double v : a.row(r)) acc += std::abs(v);
    best = std::max(best, acc);
  }
  return best;
}

StandardForm farkas_feasibility_reduce(const Problem& p) {
  validate(p);
  const std::size_t m = p.rows(), n = p.cols();
  Tensor w({m, 2 * n + m}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w(i, j) = p.weights(i, j);
      w(i, n + j) = -p.weights(i, j);
    }
    w(i, 2 * n + i) = 1.0;
  }
  return {std::move(w), p.bias};
}

std::optional<std::vector<double>> find_nonnegative_solution(const StandardForm& sf) {
  std::vector<double> rhs(sf.offset.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -sf.offset[i];
  const SimplexResult r = solve_standard_form(sf.matrix, rhs, {}, true);
  if (r.status == SimplexStatus::Infeasible) return std::nullopt;
  return r.solution;
}

}  // namespace farkasnet::lp
