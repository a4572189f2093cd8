#pragma once

// Error / Deviation / TV over greedy generative trajectories.
//
// Each test window is rolled out greedily from its input segment. Error is
// the RMSE of the generated rows against the true output segment. Along the
// generated trajectory a best-response explainer is refit around every
// output-segment prefix (same epsilon, K and alpha as training); Deviation
// is the RMSE between predictor and explainer at the center, and TV is the
// mean per-entry absolute change of the explanation parameters between
// consecutive steps (refit explainer parameters for implicit models, the
// model's own coefficient heads for explicit ones and the global AR baseline).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/explainer/dump.hpp"
#include "coop/explainer/explainer.hpp"
#include "coop/game/config.hpp"
#include "coop/predictor/model.hpp"

namespace coop::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class M>
concept Forecaster = requires(const M& m, const std::vector<Tensor>& windows, std::size_t prefix) {
  { m.channels() } -> std::convertible_to<std::size_t>;
  { m.is_explicit() } -> std::convertible_to<bool>;
  { m.rollout(windows, prefix) } -> std::same_as<std::vector<predictor::Rollout>>;
};

namespace detail {

/// Order-independent sum: sorting first makes the result bit-identical under
/// any permutation of the inputs.
inline double stable_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline void check_windows(const std::vector<Tensor>& windows, std::size_t input_len, std::size_t channels) {
  if (windows.empty()) throw EvalError("evaluation split is empty");
  for (const auto& w : windows) {
    if (w.rank() != 2 || w.cols() != channels) throw EvalError("window channel count does not match the model");
    if (input_len < 1 || input_len >= w.rows()) throw EvalError("input length must leave a nonempty horizon");
  }
}

/// Explanation of one rollout at each output-segment center.
struct SequenceExplanation {
  std::vector<double> deviation_ar;     // squared distance per center (implicit: whole mean)
  std::vector<double> deviation_const;  // explicit only
  std::vector<std::vector<double>> params;
  std::vector<explainer::ARCoefficients> fits;
};

inline SequenceExplanation explain_rollout(const predictor::Rollout& r, const game::GameConfig& cfg,
                                           std::size_t input_len, bool explicit_heads) {
  using namespace coop::explainer;
  const Tensor& x = r.trajectory;
  const std::size_t len = x.rows(), n = x.cols(), k = cfg.markov_order;
  SequenceExplanation out;
  for (std::size_t j = input_len - 1; j + 1 < len; ++j) {
    const Neighborhood nb = make_neighborhood(j, cfg.epsilon, 0, len - 1);
    const auto lags = lag_row(x, j, k);
    try {
      if (!explicit_heads) {
        const ARCoefficients g = fit_ar_explainer(x, r.outputs.mean, nb, k, cfg.ridge_alpha, true);
        const auto gv = ar_predict(g, lags);
        double d = 0.0;
        for (std::size_t c = 0; c < n; ++c) d += (r.outputs.mean(j, c) - gv[c]) * (r.outputs.mean(j, c) - gv[c]);
        out.deviation_ar.push_back(d);
        out.params.push_back(g.flatten());
        out.fits.push_back(g);
      } else {
        const ARCoefficients g = fit_ar_explainer(x, r.outputs.ar_part, nb, k, cfg.ridge_alpha, false);
        const auto gv = ar_predict(g, lags);
        const ConstantExplainer cst = fit_constant_explainer(r.outputs.theta0, nb);
        double da = 0.0, dc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          da += (r.outputs.ar_part(j, c) - gv[c]) * (r.outputs.ar_part(j, c) - gv[c]);
          dc += (r.outputs.theta0(j, c) - cst.value(0, c)) * (r.outputs.theta0(j, c) - cst.value(0, c));
        }
        out.deviation_ar.push_back(da);
        out.deviation_const.push_back(dc);
        std::vector<double> p(r.outputs.theta.row_span(j).begin(), r.outputs.theta.row_span(j).end());
        p.insert(p.end(), r.outputs.theta0.row_span(j).begin(), r.outputs.theta0.row_span(j).end());
        out.params.push_back(std::move(p));
        ARCoefficients g_full = g;
        g_full.include_bias = true;
        g_full.bias = cst.value;
        out.fits.push_back(std::move(g_full));
      }
    } catch (const ExplainerError& e) {
      throw EvalError(std::string("horizon too short for a valid explainer row: ") + e.what());
    }
  }
  return out;
}

}  // namespace detail

/// (1/(H-1)) sum_j ||p_{j+1} - p_j||_1 / dim(p) over the rows of `series` (H x dim).
inline double total_variation(const Tensor& series) {
  if (series.rank() != 2 || series.rows() < 2) throw EvalError("total_variation needs at least two time points");
  const std::size_t h = series.rows(), d = series.cols();
  if (d == 0) throw EvalError("total_variation: empty parameter vector");
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < h; ++j) {
    double step = 0.0;
    for (std::size_t c = 0; c < d; ++c) step += std::abs(series(j + 1, c) - series(j, c));
    s += step / static_cast<double>(d);
  }
  return s / static_cast<double>(h - 1);
}

inline Tensor to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor::matrix(0, 0);
  Tensor t = Tensor::matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t(i, j) = rows[i][j];
  return t;
}

template <Forecaster M>
double error_rmse(const M& model, const std::vector<Tensor>& windows, std::size_t input_len) {
  detail::check_windows(windows, input_len, model.channels());
  const auto rollouts = model.rollout(windows, input_len);
  std::vector<double> per_sequence;
  std::size_t count = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    double s = 0.0;
    for (std::size_t h = input_len; h < windows[i].rows(); ++h)
      for (std::size_t c = 0; c < windows[i].cols(); ++c) {
        const double d = rollouts[i].trajectory(h, c) - windows[i](h, c);
        s += d * d;
        ++count;
      }
    per_sequence.push_back(s);
  }
  return std::sqrt(detail::stable_sum(std::move(per_sequence)) / static_cast<double>(count));
}

template <Forecaster M>
double deviation_rmse(const M& model, const std::vector<Tensor>& windows, std::size_t input_len,
                      const game::GameConfig& cfg) {
  detail::check_windows(windows, input_len, model.channels());
  const auto rollouts = model.rollout(windows, input_len);
  std::vector<double> ar, cst;
  std::size_t count = 0;
  for (const auto& r : rollouts) {
    const auto ex = detail::explain_rollout(r, cfg, input_len, model.is_explicit());
    ar.push_back(detail::stable_sum(ex.deviation_ar));
    cst.push_back(detail::stable_sum(ex.deviation_const));
    count += ex.deviation_ar.size() * model.channels();
  }
  const double denom = static_cast<double>(count);
  double dev = std::sqrt(detail::stable_sum(ar) / denom);
  if (model.is_explicit()) dev += std::sqrt(detail::stable_sum(cst) / denom);
  return dev;
}

struct EvalReport {
  std::string model_descriptor;
  double error_rmse = 0.0;
  double deviation_rmse = 0.0;
  double tv = 0.0;
  std::vector<double> error_series;      // per generated step, RMSE over sequences and channels
  std::vector<double> deviation_series;  // per center
  std::vector<double> tv_series;         // mean per-entry change into each step (0 at the first)
  bool neighborhood_spans_horizon = false;
  std::vector<std::string> config_echo;  // "key = value" lines
  // Not part of the report file: plotting/dump payloads.
  std::vector<std::vector<double>> first_sequence_params;
  std::vector<explainer::ExplainerRecord> explainer_records;
};

/// Models that carry their own explanation parameters (the global AR
/// baseline); their TV is measured on those rather than on refits.
template <class M>
concept SelfExplaining = requires(const M& m) {
  { m.coefficients().flatten() } -> std::same_as<std::vector<double>>;
};

template <Forecaster M>
EvalReport evaluate(const M& model, const std::vector<Tensor>& windows, std::size_t input_len,
                    const game::GameConfig& cfg, std::string descriptor = {}) {
  detail::check_windows(windows, input_len, model.channels());
  const std::size_t n = model.channels(), len = windows.front().rows(), horizon = len - input_len;
  const auto rollouts = model.rollout(windows, input_len);

  EvalReport rep;
  rep.model_descriptor = std::move(descriptor);
  rep.neighborhood_spans_horizon = 2 * cfg.epsilon + 1 >= horizon;

  std::vector<std::vector<double>> err_step(horizon), dev_ar_step(horizon), dev_c_step(horizon), tv_step(horizon);
  std::vector<double> err_seq, dev_ar_seq, dev_c_seq, tv_seq;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const auto& r = rollouts[i];
    double es = 0.0;
    for (std::size_t h = 0; h < horizon; ++h) {
      double e = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double d = r.trajectory(input_len + h, c) - windows[i](input_len + h, c);
        e += d * d;
      }
      err_step[h].push_back(e);
      es += e;
    }
    err_seq.push_back(es);

    auto ex = detail::explain_rollout(r, cfg, input_len, model.is_explicit());
    if constexpr (SelfExplaining<M>) {
      for (auto& p : ex.params) p = model.coefficients().flatten();
    }
    for (std::size_t h = 0; h < horizon; ++h) {
      dev_ar_step[h].push_back(ex.deviation_ar[h]);
      if (model.is_explicit()) dev_c_step[h].push_back(ex.deviation_const[h]);
      double change = 0.0;
      if (h > 0) {
        for (std::size_t p = 0; p < ex.params[h].size(); ++p) change += std::abs(ex.params[h][p] - ex.params[h - 1][p]);
        change /= static_cast<double>(ex.params[h].size());
      }
      tv_step[h].push_back(change);
      const double dev = ex.deviation_ar[h] + (model.is_explicit() ? ex.deviation_const[h] : 0.0);
      rep.explainer_records.push_back({i, input_len - 1 + h, ex.fits[h], dev});
    }
    dev_ar_seq.push_back(detail::stable_sum(ex.deviation_ar));
    dev_c_seq.push_back(detail::stable_sum(ex.deviation_const));
    tv_seq.push_back(horizon >= 2 ? total_variation(to_matrix(ex.params)) : 0.0);
    if (i == 0) rep.first_sequence_params = ex.params;
  }

  const double seqs = static_cast<double>(rollouts.size());
  const double cells = seqs * static_cast<double>(horizon * n);
  rep.error_rmse = std::sqrt(detail::stable_sum(err_seq) / cells);
  rep.deviation_rmse = std::sqrt(detail::stable_sum(dev_ar_seq) / cells);
  if (model.is_explicit()) rep.deviation_rmse += std::sqrt(detail::stable_sum(dev_c_seq) / cells);
  rep.tv = detail::stable_sum(tv_seq) / seqs;
  for (std::size_t h = 0; h < horizon; ++h) {
    const double per = seqs * static_cast<double>(n);
    rep.error_series.push_back(std::sqrt(detail::stable_sum(err_step[h]) / per));
    double d = std::sqrt(detail::stable_sum(dev_ar_step[h]) / per);
    if (model.is_explicit()) d += std::sqrt(detail::stable_sum(dev_c_step[h]) / per);
    rep.deviation_series.push_back(d);
    rep.tv_series.push_back(detail::stable_sum(tv_step[h]) / seqs);
  }
  return rep;
}

}  // namespace coop::eval
