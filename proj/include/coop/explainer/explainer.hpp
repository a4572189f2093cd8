#pragma once

// Local best-response explainers: K-order AR models fit by ridge regression
// to predictor outputs over a neighborhood, and constant vectors fit by the
// mean. Deviation is squared L2 throughout.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/explainer/neighborhood.hpp"
#include "coop/numerics/linalg.hpp"

namespace coop::explainer {

class ExplainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// g(x_{1:i}) = sum_{k=1..K} coef[k-1] * x_{i-k+1} + bias.
struct ARCoefficients {
  std::size_t order = 1;
  std::size_t channels = 1;
  std::vector<Tensor> lags;  // K matrices, channels x channels
  Tensor bias;               // 1 x channels
  bool include_bias = true;

  static ARCoefficients zeros(std::size_t order, std::size_t channels, bool include_bias = true) {
    ARCoefficients g;
    g.order = order;
    g.channels = channels;
    g.include_bias = include_bias;
    g.lags.assign(order, Tensor::matrix(channels, channels));
    g.bias = Tensor::matrix(1, channels);
    return g;
  }

  /// theta_1 .. theta_K (row-major) followed by theta_0.
  std::vector<double> flatten() const {
    std::vector<double> p;
    p.reserve(order * channels * channels + channels);
    for (const auto& m : lags) p.insert(p.end(), m.values().begin(), m.values().end());
    p.insert(p.end(), bias.values().begin(), bias.values().end());
    return p;
  }

  std::size_t parameter_count() const { return order * channels * channels + channels; }
};

struct ConstantExplainer {
  Tensor value;  // 1 x dim
};

/// Lag vector [x_i, x_{i-1}, ..., x_{i-K+1}] from the rows of `inputs`;
/// lags before the first row are zero.
inline std::vector<double> lag_row(const Tensor& inputs, std::size_t i, std::size_t order) {
  const std::size_t n = inputs.cols();
  std::vector<double> row(order * n, 0.0);
  for (std::size_t q = 0; q < order; ++q) {
    if (q > i) break;
    for (std::size_t c = 0; c < n; ++c) row[q * n + c] = inputs(i - q, c);
  }
  return row;
}

/// Neighborhood members that have K genuine lags available.
inline std::vector<std::size_t> usable_members(const Neighborhood& nb, std::size_t order) {
  std::vector<std::size_t> out;
  for (std::size_t i = nb.first; i <= nb.last; ++i)
    if (i + 1 >= order) out.push_back(i);
  return out;
}

inline std::vector<double> ar_predict(const ARCoefficients& g, std::span<const double> lags) {
  const std::size_t n = g.channels;
  if (lags.size() != g.order * n) {
    throw ExplainerError("ar_predict: expected " + std::to_string(g.order) + " lag vectors of width " +
                         std::to_string(n) + ", got " + std::to_string(lags.size()) + " values");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = g.include_bias ? g.bias(0, r) : 0.0;
    for (std::size_t q = 0; q < g.order; ++q)
      for (std::size_t c = 0; c < n; ++c) s += g.lags[q](r, c) * lags[q * n + c];
    out[r] = s;
  }
  return out;
}

/// Ridge fit of an AR(K) explainer over the neighborhood.
///
/// `inputs` (L x N) supplies the lags; `targets` (L x N) holds the outputs
/// being explained at each index (predictor means, never ground truth).
/// Members lacking K lags are dropped. Only the lag coefficients are
/// penalized.
inline ARCoefficients fit_ar_explainer(const Tensor& inputs, const Tensor& targets, const Neighborhood& nb,
                                       std::size_t order, double alpha, bool include_bias = true) {
  if (order < 1) throw ExplainerError("fit_ar_explainer: order must be >= 1");
  if (inputs.rank() != 2 || targets.rank() != 2 || targets.rows() != inputs.rows() || targets.cols() != inputs.cols()) {
    throw ExplainerError("fit_ar_explainer: inputs and targets must both be L x N");
  }
  if (nb.last >= inputs.rows()) throw ExplainerError("fit_ar_explainer: neighborhood exceeds sequence");
  const auto rows = usable_members(nb, order);
  if (rows.empty()) {
    throw ExplainerError("fit_ar_explainer: no neighborhood member around index " + std::to_string(nb.center) +
                         " has " + std::to_string(order) + " lags");
  }
  const std::size_t n = inputs.cols(), d = order * n;
  RidgeProblem p;
  p.design = Tensor::matrix(rows.size(), d);
  p.targets = Tensor::matrix(rows.size(), n);
  p.alpha = alpha;
  p.fit_intercept = include_bias;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto lr = lag_row(inputs, rows[m], order);
    for (std::size_t j = 0; j < d; ++j) p.design(m, j) = lr[j];
    for (std::size_t c = 0; c < n; ++c) p.targets(m, c) = targets(rows[m], c);
  }
  const RidgeSolution sol = solve_ridge(p);

  ARCoefficients g = ARCoefficients::zeros(order, n, include_bias);
  for (std::size_t q = 0; q < order; ++q)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) g.lags[q](r, c) = sol.coefficients(q * n + c, r);
  if (include_bias) g.bias = sol.intercept;
  return g;
}

/// Mean of the rows of `values` (M x dim): the L2 best constant.
inline ConstantExplainer fit_constant_explainer(const Tensor& values) {
  if (values.rank() != 2 || values.rows() == 0) throw ExplainerError("fit_constant_explainer: no values");
  const std::size_t m = values.rows(), d = values.cols();
  Tensor mean = Tensor::matrix(1, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) mean(0, j) += values(i, j);
  for (std::size_t j = 0; j < d; ++j) mean(0, j) /= static_cast<double>(m);
  return ConstantExplainer{mean};
}

/// Constant fit over the neighborhood rows of `values` (L x dim).
inline ConstantExplainer fit_constant_explainer(const Tensor& values, const Neighborhood& nb) {
  if (nb.last >= values.rows()) throw ExplainerError("fit_constant_explainer: neighborhood exceeds sequence");
  Tensor sub = Tensor::matrix(nb.size(), values.cols());
  for (std::size_t i = nb.first; i <= nb.last; ++i)
    for (std::size_t j = 0; j < values.cols(); ++j) sub(i - nb.first, j) = values(i, j);
  return fit_constant_explainer(sub);
}

/// (1/|B|) sum over members of ||f - g||^2; rows of both tensors are aligned
/// with the members.
inline double local_deviation(const Tensor& f_outputs, const Tensor& g_outputs, const Neighborhood& nb) {
  if (!f_outputs.same_shape(g_outputs) || f_outputs.rank() != 2) {
    throw ExplainerError("local_deviation: output shapes differ");
  }
  if (f_outputs.rows() != nb.size()) {
    throw ExplainerError("local_deviation: " + std::to_string(f_outputs.rows()) + " rows for a neighborhood of " +
                         std::to_string(nb.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f_outputs.size(); ++i) {
    const double d = f_outputs[i] - g_outputs[i];
    s += d * d;
  }
  return s / static_cast<double>(nb.size());
}

}  // namespace coop::explainer
