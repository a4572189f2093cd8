#pragma once

// Co-operative game objectives.
//
// For every output-segment step j (prefix ends input_len-1 .. L-2) the
// predictor pays its Gaussian NLL for x_{j+1}. Sequences selected for
// regularization additionally pay lambda times a deviation penalty against
// best-response explainers fit on a detached snapshot of the predictor's own
// outputs over the neighborhood of j:
//
//   asymmetric  ||mu_j - g_j(x_{1:j})||^2                     (center only)
//   symmetric   (1/|B|) sum_{j' in B} ||mu_j' - g_j(x_{1:j'})||^2
//   explicit    the same, applied separately to the AR part of the mean
//               (bias-free AR explainer) and to theta_0 (constant explainer)
//
// Explainer values enter the tape as constants, so no gradient flows through
// the fits.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coop/explainer/explainer.hpp"
#include "coop/game/config.hpp"
#include "coop/predictor/model.hpp"
#include "coop/predictor/nll.hpp"

namespace coop::game {

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Head { mean, ar_part, theta0 };

/// weight * ||head(step) - target||^2
struct PenaltyTerm {
  std::size_t step = 0;
  Head head = Head::mean;
  std::vector<double> target;
  double weight = 1.0;
};

using PenaltyTerms = std::vector<PenaltyTerm>;

struct ObjectiveParts {
  double nll = 0.0;
  double penalty = 0.0;  // already multiplied by lambda
};

inline void check_sequence_length(std::size_t len, std::size_t input_len, std::size_t order) {
  if (len < order + 2) {
    throw GameError("sequence of length " + std::to_string(len) + " is too short for Markov order " +
                    std::to_string(order));
  }
  if (input_len < 1 || input_len >= len) throw GameError("input length must lie in [1, sequence length)");
}

/// Best-response penalty terms for one sequence.
///
/// `inputs` (L x N) are the observed rows used as explainer lags and
/// `snapshot` holds the predictor outputs on them.
inline PenaltyTerms best_response_terms(const Tensor& inputs, const predictor::PredictorOutput& snapshot,
                                        const GameConfig& cfg, std::size_t input_len, bool explicit_heads) {
  using namespace coop::explainer;
  const std::size_t len = inputs.rows(), k = cfg.markov_order;
  check_sequence_length(len, input_len, k);
  PenaltyTerms terms;
  const bool symmetric = cfg.mode == GameMode::symmetric;

  auto push_ar_terms = [&](const ARCoefficients& g, const Neighborhood& nb, Head head) {
    if (!symmetric) {
      terms.push_back({nb.center, head, ar_predict(g, lag_row(inputs, nb.center, k)), 1.0});
      return;
    }
    const auto rows = usable_members(nb, k);
    const double w = 1.0 / static_cast<double>(rows.size());
    for (std::size_t m : rows) terms.push_back({m, head, ar_predict(g, lag_row(inputs, m, k)), w});
  };

  for (std::size_t j = input_len - 1; j + 1 < len; ++j) {
    const Neighborhood nb = make_neighborhood(j, cfg.epsilon, 0, len - 1);
    if (!explicit_heads) {
      push_ar_terms(fit_ar_explainer(inputs, snapshot.mean, nb, k, cfg.ridge_alpha, true), nb, Head::mean);
      continue;
    }
    push_ar_terms(fit_ar_explainer(inputs, snapshot.ar_part, nb, k, cfg.ridge_alpha, false), nb, Head::ar_part);
    const ConstantExplainer c = fit_constant_explainer(snapshot.theta0, nb);
    const std::vector<double> value(c.value.values().begin(), c.value.values().end());
    if (!symmetric) {
      terms.push_back({j, Head::theta0, value, 1.0});
    } else {
      const double w = 1.0 / static_cast<double>(nb.size());
      for (std::size_t m = nb.first; m <= nb.last; ++m) terms.push_back({m, Head::theta0, value, w});
    }
  }
  return terms;
}

namespace detail {

inline const Var& head_of(const predictor::StepVars& sv, Head h) {
  switch (h) {
    case Head::mean: return sv.mean;
    case Head::ar_part: return sv.ar_part;
    case Head::theta0: return sv.theta0;
  }
  return sv.mean;
}

inline predictor::PredictorOutput snapshot_row(const std::vector<predictor::StepVars>& steps, std::size_t row,
                                               bool explicit_heads) {
  const std::size_t len = steps.size();
  auto take = [&](auto member) {
    const Tensor& first = (steps.front().*member).value();
    Tensor t = Tensor::matrix(len, first.cols());
    for (std::size_t j = 0; j < len; ++j) {
      const Tensor& v = (steps[j].*member).value();
      for (std::size_t c = 0; c < v.cols(); ++c) t(j, c) = v(row, c);
    }
    return t;
  };
  predictor::PredictorOutput o;
  o.mean = take(&predictor::StepVars::mean);
  if (explicit_heads) {
    o.ar_part = take(&predictor::StepVars::ar_part);
    o.theta0 = take(&predictor::StepVars::theta0);
  }
  return o;
}

}  // namespace detail

/// The objective given the per-step outputs of a forward pass over `batch`.
///
/// `regularized[b]` selects the sequences that receive the penalty. When
/// `frozen` is given its terms replace the best responses (one entry per
/// batch sequence); `terms_out` receives the terms that were used.
inline Var objective_from_steps(Tape& tape, const std::vector<predictor::StepVars>& steps, bool explicit_heads,
                                const std::vector<const Tensor*>& batch, const std::vector<char>& regularized,
                                const GameConfig& cfg, std::size_t input_len, bool with_penalty = true,
                                const std::vector<PenaltyTerms>* frozen = nullptr, ObjectiveParts* parts = nullptr,
                                std::vector<PenaltyTerms>* terms_out = nullptr) {
  using namespace coop::ops;
  if (batch.empty()) throw GameError("game objective: empty batch");
  if (regularized.size() != batch.size()) throw GameError("game objective: regularization mask size mismatch");
  const std::size_t len = batch.front()->rows(), n = batch.front()->cols(), bsz = batch.size();
  check_sequence_length(len, input_len, cfg.markov_order);
  if (steps.size() != len) throw GameError("game objective: step count differs from sequence length");

  Var nll;
  for (std::size_t j = input_len - 1; j + 1 < len; ++j) {
    Tensor y = Tensor::matrix(bsz, n);
    for (std::size_t b = 0; b < bsz; ++b)
      for (std::size_t c = 0; c < n; ++c) y(b, c) = (*batch[b])(j + 1, c);
    const Var term = predictor::gaussian_nll(steps[j].mean, steps[j].logvar, tape.constant(std::move(y)));
    nll = nll.valid() ? nll + term : term;
  }
  if (parts) *parts = ObjectiveParts{nll.value()[0], 0.0};
  if (!with_penalty) return nll;

  // Collapse all terms hitting the same (step, head) into
  //   W ||h - S/W||^2 + (Q - ||S||^2 / W),  W = sum w, S = sum w a, Q = sum w ||a||^2.
  struct Acc {
    Tensor weight;  // bsz x 1
    Tensor wsum;    // bsz x n
  };
  std::map<std::pair<std::size_t, int>, Acc> acc;
  double constant = 0.0;
  std::vector<double> q_total(bsz, 0.0);
  if (terms_out) terms_out->assign(bsz, {});
  for (std::size_t b = 0; b < bsz; ++b) {
    if (!regularized[b]) continue;
    PenaltyTerms terms = frozen ? (*frozen).at(b)
                                : best_response_terms(*batch[b], detail::snapshot_row(steps, b, explicit_heads), cfg,
                                                      input_len, explicit_heads);
    for (const auto& t : terms) {
      if (t.step >= len || t.target.size() != n) throw GameError("penalty term out of range");
      auto [it, fresh] = acc.try_emplace({t.step, static_cast<int>(t.head)});
      if (fresh) it->second = Acc{Tensor::matrix(bsz, 1), Tensor::matrix(bsz, n)};
      it->second.weight(b, 0) += t.weight;
      for (std::size_t c = 0; c < n; ++c) {
        it->second.wsum(b, c) += t.weight * t.target[c];
        q_total[b] += t.weight * t.target[c] * t.target[c];
      }
    }
    if (terms_out) (*terms_out)[b] = std::move(terms);
  }
  for (double q : q_total) constant += q;

  Var penalty;
  for (auto& [key, a] : acc) {
    Tensor centroid = Tensor::matrix(bsz, n);
    for (std::size_t b = 0; b < bsz; ++b) {
      const double w = a.weight(b, 0);
      if (w <= 0.0) continue;
      double s2 = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        centroid(b, c) = a.wsum(b, c) / w;
        s2 += a.wsum(b, c) * a.wsum(b, c);
      }
      constant -= s2 / w;
    }
    const Var& h = detail::head_of(steps[key.first], static_cast<Head>(key.second));
    const Var part = sum(mul_col(square(h - tape.constant(std::move(centroid))), tape.constant(a.weight)));
    penalty = penalty.valid() ? penalty + part : part;
  }
  if (!penalty.valid()) return nll;
  // The collapsed constant is a sum of nonnegative squared residuals up to rounding.
  const Var scaled = scale(shift(penalty, constant), cfg.lambda);
  if (parts) parts->penalty = scaled.value()[0];
  return nll + scaled;
}

/// Sum over the batch of per-sequence objectives for `model` bound on `tape`.
inline Var game_objective(Tape& tape, const predictor::SequenceModel& model, const predictor::SequenceModel::Bound& bound,
                          const std::vector<const Tensor*>& batch, const std::vector<char>& regularized,
                          const GameConfig& cfg, std::size_t input_len, bool with_penalty = true,
                          const std::vector<PenaltyTerms>* frozen = nullptr, ObjectiveParts* parts = nullptr,
                          std::vector<PenaltyTerms>* terms_out = nullptr) {
  if (batch.empty()) throw GameError("game objective: empty batch");
  const bool explicit_heads = model.is_explicit();
  if (explicit_heads != (cfg.parameterization == predictor::Parameterization::explicit_ar)) {
    throw GameError("game config parameterization does not match the model");
  }
  if (explicit_heads && model.config().ar_order != cfg.markov_order) {
    throw GameError("explicit model AR order differs from the game's Markov order");
  }
  check_sequence_length(batch.front()->rows(), input_len, cfg.markov_order);
  const auto steps = model.forward(tape, bound, batch);
  return objective_from_steps(tape, steps, explicit_heads, batch, regularized, cfg, input_len, with_penalty, frozen,
                              parts, terms_out);
}

namespace detail {

inline double single_sequence_objective(const predictor::SequenceModel& model, const Tensor& sequence,
                                        const GameConfig& cfg, std::size_t input_len, ObjectiveParts* parts) {
  Tape tape;
  const auto bound = model.bind(tape, false);
  return game_objective(tape, model, bound, {&sequence}, {1}, cfg, input_len, true, nullptr, parts).value()[0];
}

}  // namespace detail

/// Implicit model, penalty at the neighborhood center only.
inline double asymmetric_step_loss(const predictor::SequenceModel& model, const Tensor& sequence, GameConfig cfg,
                                   std::size_t input_len, ObjectiveParts* parts = nullptr) {
  if (model.is_explicit()) throw GameError("asymmetric_step_loss needs an implicit model");
  cfg.mode = GameMode::asymmetric;
  return detail::single_sequence_objective(model, sequence, cfg, input_len, parts);
}

/// Implicit model, penalty spread over the whole neighborhood.
inline double symmetric_step_loss(const predictor::SequenceModel& model, const Tensor& sequence, GameConfig cfg,
                                  std::size_t input_len, ObjectiveParts* parts = nullptr) {
  if (model.is_explicit()) throw GameError("symmetric_step_loss needs an implicit model");
  cfg.mode = GameMode::symmetric;
  return detail::single_sequence_objective(model, sequence, cfg, input_len, parts);
}

/// Explicit model, coefficient-specific penalties; cfg.mode picks center-only
/// or neighborhood-wide application.
inline double explicit_step_loss(const predictor::SequenceModel& model, const Tensor& sequence, const GameConfig& cfg,
                                 std::size_t input_len, ObjectiveParts* parts = nullptr) {
  if (!model.is_explicit()) throw GameError("explicit_step_loss needs an explicit model");
  return detail::single_sequence_objective(model, sequence, cfg, input_len, parts);
}

}  // namespace coop::game
