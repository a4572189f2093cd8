#pragma once

// Nonparametric fixed point of the game with squared error and constant
// explainers. The predictor is a free value f_t per index and the explainer
// at t is the neighborhood mean (K f)_t.
//
//   asymmetric  (1 + lambda) f - lambda K f = y
//   symmetric   f + lambda D f - lambda K^T K f = y,  D = diag(K^T 1)
//
// In the interior D = I and K^T K is the doubled averaging operator; near
// the ends D counts how much neighborhood weight each index carries.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "coop/explainer/neighborhood.hpp"
#include "coop/game/config.hpp"
#include "coop/numerics/linalg.hpp"

namespace coop::game {

/// Row t averages the indices of the clipped neighborhood of t.
inline Tensor averaging_operator(std::size_t length, std::size_t epsilon) {
  if (length == 0) throw std::invalid_argument("averaging_operator: empty series");
  Tensor k = Tensor::matrix(length, length);
  for (std::size_t t = 0; t < length; ++t) {
    const auto nb = explainer::make_neighborhood(t, epsilon, 0, length - 1);
    const double w = 1.0 / static_cast<double>(nb.size());
    for (std::size_t s = nb.first; s <= nb.last; ++s) k(t, s) = w;
  }
  return k;
}

/// System matrix A with A f = y at the fixed point.
inline Tensor fixed_point_system(std::size_t length, std::size_t epsilon, double lambda, GameMode mode) {
  const Tensor k = averaging_operator(length, epsilon);
  Tensor a = Tensor::matrix(length, length);
  if (mode == GameMode::asymmetric) {
    for (std::size_t i = 0; i < length; ++i)
      for (std::size_t j = 0; j < length; ++j) a(i, j) = (i == j ? 1.0 + lambda : 0.0) - lambda * k(i, j);
    return a;
  }
  const Tensor ktk = matmul(transpose(k), k);
  for (std::size_t i = 0; i < length; ++i) {
    double d = 0.0;
    for (std::size_t t = 0; t < length; ++t) d += k(t, i);
    for (std::size_t j = 0; j < length; ++j) a(i, j) = (i == j ? 1.0 + lambda * d : 0.0) - lambda * ktk(i, j);
  }
  return a;
}

inline std::vector<double> nonparametric_fixed_point(std::span<const double> y, std::size_t epsilon, double lambda,
                                                     GameMode mode) {
  if (y.empty()) throw std::invalid_argument("fixed point: empty series");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("fixed point: lambda must be >= 0");
  for (double v : y)
    if (!std::isfinite(v)) throw NonFiniteError("fixed point: input series is not finite");
  if (lambda == 0.0) return {y.begin(), y.end()};
  const Tensor a = fixed_point_system(y.size(), epsilon, lambda, mode);
  return linear_solve(a, std::vector<double>(y.begin(), y.end()));
}

/// max_t |(A f - y)_t|
inline double stationarity_residual(std::span<const double> f, std::span<const double> y, std::size_t epsilon,
                                    double lambda, GameMode mode) {
  if (f.size() != y.size() || y.empty()) throw std::invalid_argument("stationarity_residual: length mismatch");
  const Tensor a = fixed_point_system(y.size(), epsilon, lambda, mode);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double r = -y[i];
    for (std::size_t j = 0; j < y.size(); ++j) r += a(i, j) * f[j];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

inline double discrete_total_variation(std::span<const double> f) {
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < f.size(); ++t) s += std::abs(f[t + 1] - f[t]);
  return s;
}

}  // namespace coop::game
