#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include "coop/numerics/tape.hpp"

namespace coop::predictor {

inline const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Negative log density of y under N(mean, diag(exp(logvar))).
inline double gaussian_nll(std::span<const double> mean, std::span<const double> logvar, std::span<const double> y) {
  if (mean.size() != logvar.size() || mean.size() != y.size()) throw ShapeError("gaussian_nll: dimension mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    if (!std::isfinite(mean[c]) || !std::isfinite(logvar[c]) || !std::isfinite(y[c])) {
      throw NonFiniteError("gaussian_nll: non-finite input");
    }
    const double d = y[c] - mean[c];
    s += 0.5 * (logvar[c] + d * d * std::exp(-logvar[c]) + kLog2Pi);
  }
  if (!std::isfinite(s)) throw NonFiniteError("gaussian_nll: non-finite result");
  return s;
}

/// Tape version summed over every row of a batch: mean, logvar, y are B x N.
inline Var gaussian_nll(const Var& mean, const Var& logvar, const Var& y) {
  using namespace coop::ops;
  const Var diff = y - mean;
  const Var weighted = square(diff) * ops::exp(scale(logvar, -1.0));
  const double entries = static_cast<double>(mean.value().size());
  return scale(shift(sum(logvar + weighted), entries * kLog2Pi), 0.5);
}

}  // namespace coop::predictor
