#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace fkt {

using farkasnet::Rng;
using farkasnet::Tape;
using farkasnet::Tensor;
using farkasnet::Var;

inline Tensor uniform(farkasnet::Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

inline Tensor normal(farkasnet::Shape shape, Rng& rng, double sigma = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, sigma);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Builds a scalar loss from leaves holding the given inputs, in order.
using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheck {
  double worst = 0.0;       // largest relative error over the checked entries
  std::size_t checked = 0;
  std::size_t kinks = 0;    // entries with a kink at x: compared against the one-sided slopes
  std::string where;
};

inline double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-3}); }

// Relative error of `a` against central differences of f around the entry x.
// A mismatch at h is retried at h/10 and h/100: a kink inside [x-h, x+h]
// but not at x drops out of the smaller window, a wrong derivative does not.
// If the one-sided slopes still differ at h/100 the kink sits at x and `a`
// must match one of them.
inline double entry_error(double& x, double a, double f0, const std::function<double()>& f, double h, bool& kink) {
  const double x0 = x;
  double best = std::numeric_limits<double>::infinity();
  double fp = 0.0, fm = 0.0, step = h;
  for (int k = 0; k < 3; ++k, step /= 10.0) {
    x = x0 + step;
    fp = f();
    x = x0 - step;
    fm = f();
    x = x0;
    best = std::min(best, rel_err(a, (fp - fm) / (2.0 * step)));
    if (best <= 1e-6) return best;
  }
  step *= 10.0;
  const double forward = (fp - f0) / step, backward = (f0 - fm) / step;
  if (rel_err(forward, backward) > 1e-3) {
    kink = true;
    return std::min(rel_err(a, forward), rel_err(a, backward));
  }
  return best;
}

inline double loss_at(const std::vector<Tensor>& inputs, const LossFn& f) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  return tape.value(f(tape, leaves))[0];
}

inline void record(GradCheck& out, double err, bool kink, const std::string& what, std::size_t k, std::size_t i,
                   double a) {
  ++out.checked;
  out.kinks += kink ? 1 : 0;
  if (err > out.worst) {
    out.worst = err;
    out.where = what + " " + std::to_string(k) + " entry " + std::to_string(i) + ": analytic " + std::to_string(a) +
                (kink ? " (kink)" : "");
  }
}

// Central differences from h = 1e-5, relative error |a - n| / max(|a|, |n|, 1e-3).
inline GradCheck gradcheck(std::vector<Tensor> inputs, const LossFn& f, double h = 1e-5) {
  std::vector<Tensor> analytic;
  double f0 = 0.0;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
    Var loss = f(tape, leaves);
    f0 = tape.value(loss)[0];
    tape.backward(loss);
    for (Var v : leaves) analytic.push_back(tape.grad(v));
  }
  GradCheck out;
  const std::function<double()> value = [&] { return loss_at(inputs, f); };
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      bool kink = false;
      const double err = entry_error(inputs[k][i], analytic[k][i], f0, value, h, kink);
      record(out, err, kink, "input", k, i, analytic[k][i]);
    }
  }
  return out;
}

// Same check for parameters bound through a Binding (a network forward).
// loss(binding) must bind the tensors of `params` in that order.
inline GradCheck gradcheck_params(const std::vector<Tensor*>& params,
                                  const std::function<Var(farkasnet::Binding&)>& loss, double h = 1e-5) {
  const std::function<double()> value = [&] {
    Tape tape;
    farkasnet::Binding b(tape);
    return tape.value(loss(b))[0];
  };
  std::vector<Tensor> analytic;
  double f0 = 0.0;
  {
    Tape tape;
    farkasnet::Binding b(tape);
    Var l = loss(b);
    f0 = tape.value(l)[0];
    tape.backward(l);
    analytic = b.gradients();
  }
  GradCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      bool kink = false;
      const double err = entry_error(p[i], analytic[k][i], f0, value, h, kink);
      record(out, err, kink, "parameter", k, i, analytic[k][i]);
    }
  }
  return out;
}

// sum_i (y r)_i with r drawn from `seed`: the same weights on every call.
inline Var weighted_sum(Tape& tape, Var y, std::uint64_t seed) {
  const Tensor& v = tape.value(y);
  Rng rng(seed, 0x7773);
  Tensor r = uniform({v.cols(), 1}, rng, -1.0, 1.0);
  return farkasnet::sum_all(farkasnet::matmul(y, tape.constant(std::move(r))));
}

}  // namespace fkt
