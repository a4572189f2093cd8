#pragma once

#include <vector>

#include "coop/explainer/explainer.hpp"
#include "coop/predictor/model.hpp"

namespace coop::predictor {

/// A single AR(K) model used as the predictor for every prefix; lags before
/// the start of a sequence are zero.
class GlobalARModel {
 public:
  explicit GlobalARModel(explainer::ARCoefficients coefficients) : g_(std::move(coefficients)) {}

  const explainer::ARCoefficients& coefficients() const { return g_; }
  std::size_t channels() const { return g_.channels; }
  bool is_explicit() const { return false; }

  PredictorOutput forward(const Tensor& sequence) const {
    if (sequence.rank() != 2 || sequence.cols() != g_.channels) throw PredictorError("global AR: channel mismatch");
    const std::size_t len = sequence.rows(), n = g_.channels;
    PredictorOutput o;
    o.mean = Tensor::matrix(len, n);
    o.logvar = Tensor::matrix(len, n);
    for (std::size_t j = 0; j < len; ++j) {
      const auto m = explainer::ar_predict(g_, explainer::lag_row(sequence, j, g_.order));
      for (std::size_t c = 0; c < n; ++c) o.mean(j, c) = m[c];
    }
    return o;
  }

  std::vector<Rollout> rollout(const std::vector<Tensor>& windows, std::size_t prefix_len) const {
    std::vector<Rollout> out;
    for (const auto& w : windows) {
      if (w.rank() != 2 || w.cols() != g_.channels) throw PredictorError("global AR: channel mismatch");
      if (prefix_len < 1 || prefix_len > w.rows()) throw PredictorError("rollout: prefix length out of range");
      const std::size_t len = w.rows(), n = g_.channels;
      Rollout r;
      r.trajectory = w;
      r.outputs.mean = Tensor::matrix(len, n);
      r.outputs.logvar = Tensor::matrix(len, n);
      for (std::size_t j = 0; j < len; ++j) {
        const auto m = explainer::ar_predict(g_, explainer::lag_row(r.trajectory, j, g_.order));
        for (std::size_t c = 0; c < n; ++c) {
          r.outputs.mean(j, c) = m[c];
          if (j + 1 < len && j + 1 >= prefix_len) r.trajectory(j + 1, c) = m[c];
        }
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  explainer::ARCoefficients g_;
};

/// Ridge fit of one AR(K) model to next-step targets across all windows.
inline GlobalARModel fit_global_ar(const std::vector<Tensor>& windows, std::size_t order, double alpha) {
  if (windows.empty()) throw PredictorError("fit_global_ar: no windows");
  const std::size_t n = windows.front().cols(), d = order * n;
  std::vector<double> xs, ys;
  std::size_t m = 0;
  for (const auto& w : windows) {
    for (std::size_t j = order - 1; j + 1 < w.rows(); ++j) {
      const auto lr = explainer::lag_row(w, j, order);
      xs.insert(xs.end(), lr.begin(), lr.end());
      for (std::size_t c = 0; c < n; ++c) ys.push_back(w(j + 1, c));
      ++m;
    }
  }
  if (m == 0) throw PredictorError("fit_global_ar: windows too short for the AR order");
  RidgeProblem p{Tensor({m, d}, std::move(xs)), Tensor({m, n}, std::move(ys)), alpha};
  const RidgeSolution sol = solve_ridge(p);
  explainer::ARCoefficients g = explainer::ARCoefficients::zeros(order, n, true);
  for (std::size_t q = 0; q < order; ++q)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) g.lags[q](r, c) = sol.coefficients(q * n + c, r);
  g.bias = sol.intercept;
  return GlobalARModel(std::move(g));
}

}  // namespace coop::predictor
