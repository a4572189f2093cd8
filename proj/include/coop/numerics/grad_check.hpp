#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/numerics/tape.hpp"

namespace coop {

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  std::vector<double> analytic;  // flattened over all input tensors
  std::vector<double> numeric;
  std::vector<double> relative_error;
  double max_relative_error = 0.0;
  bool passed = false;
};

class GradCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double evaluate_scalar(const ScalarFunction& f, const std::vector<Tensor>& point) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(point.size());
  for (const auto& p : point) vars.push_back(tape.constant(p));
  const Var out = f(tape, vars);
  const Tensor& v = out.value();
  if (v.size() != 1) throw GradCheckError("grad_check: function is not scalar-valued");
  return v[0];
}

}  // namespace detail

/// Compares reverse-mode gradients of `f` at `point` with central differences.
///
/// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-6 * max(1, |f|)),
/// the floor keeping round-off in f from dominating coordinates whose true
/// gradient is zero.
inline GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Tensor>& point,
                                  double step = 1e-5, double tolerance = 1e-4) {
  GradCheckReport report;
  double f0 = 0.0;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : point) vars.push_back(tape.variable(p));
    const Var out = f(tape, vars);
    if (out.value().size() != 1) throw GradCheckError("grad_check: function is not scalar-valued");
    f0 = out.value()[0];
    const Gradients g = tape.backward(out);
    for (const auto& v : vars) {
      const Tensor gv = g[v];
      report.analytic.insert(report.analytic.end(), gv.values().begin(), gv.values().end());
    }
  }
  const double floor = 1e-6 * std::max(1.0, std::abs(f0));
  std::vector<Tensor> probe = point;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double orig = probe[t][i];
      double plus = 0.0, minus = 0.0;
      try {
        probe[t][i] = orig + step;
        plus = detail::evaluate_scalar(f, probe);
        probe[t][i] = orig - step;
        minus = detail::evaluate_scalar(f, probe);
      } catch (const std::exception& e) {
        throw GradCheckError(std::string("grad_check: evaluation failed at perturbed point: ") + e.what());
      }
      probe[t][i] = orig;
      report.numeric.push_back((plus - minus) / (2.0 * step));
    }
  }
  for (std::size_t i = 0; i < report.analytic.size(); ++i) {
    const double a = report.analytic[i], n = report.numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    const double rel = std::abs(a - n) / denom;
    report.relative_error.push_back(rel);
    report.max_relative_error = std::max(report.max_relative_error, rel);
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

inline GradCheckReport grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& point,
                                  double step = 1e-5, double tolerance = 1e-4) {
  return grad_check([&f](Tape& t, std::span<const Var> v) { return f(t, v[0]); },
                    std::vector<Tensor>{point}, step, tolerance);
}

}  // namespace coop
