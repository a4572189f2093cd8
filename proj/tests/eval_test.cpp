#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "coop/eval/metrics.hpp"
#include "coop/eval/report.hpp"
#include "coop/predictor/global_ar.hpp"
#include "coop/predictor/model.hpp"

using namespace coop;
using namespace coop::eval;
using predictor::GlobalARModel;
using predictor::Parameterization;
using predictor::PredictorConfig;
using predictor::SequenceModel;

namespace {

PredictorConfig tiny(std::size_t n, Parameterization p, std::size_t k, std::uint64_t seed) {
  PredictorConfig c;
  c.channels = n;
  c.conv_width = 2;
  c.conv_filters = 3;
  c.hidden = 4;
  c.dense1 = 4;
  c.dense2 = 3;
  c.parameterization = p;
  c.ar_order = k;
  c.seed = seed;
  return c;
}

game::GameConfig eval_cfg(std::size_t k, std::size_t eps, double alpha) {
  game::GameConfig g;
  g.markov_order = k;
  g.epsilon = eps;
  g.ridge_alpha = alpha;
  return g;
}

explainer::ARCoefficients ar2_1ch(double a1, double a2, double bias) {
  auto g = explainer::ARCoefficients::zeros(2, 1, true);
  g.lags[0](0, 0) = a1;
  g.lags[1](0, 0) = a2;
  g.bias(0, 0) = bias;
  return g;
}

// Windows whose every row after the second follows the AR(2) recursion exactly.
std::vector<Tensor> ar_windows(const explainer::ARCoefficients& g, std::size_t count, std::size_t len, Rng& rng) {
  std::vector<Tensor> out;
  for (std::size_t w = 0; w < count; ++w) {
    Tensor t = Tensor::matrix(len, 1);
    t(0, 0) = rng.normal();
    t(1, 0) = rng.normal();
    for (std::size_t i = 2; i < len; ++i) t(i, 0) = explainer::ar_predict(g, explainer::lag_row(t, i - 1, 2))[0];
    out.push_back(t);
  }
  return out;
}

std::vector<Tensor> random_windows(Rng& rng, std::size_t count, std::size_t len, std::size_t n) {
  std::vector<Tensor> out;
  for (std::size_t w = 0; w < count; ++w) {
    Tensor t = Tensor::matrix(len, n);
    for (double& v : t.storage()) v = rng.normal();
    out.push_back(t);
  }
  return out;
}

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.storage()) v = rng.normal();
  return t;
}

// Ridge prediction at `row` from a fit over `members`; intercept unpenalized.
Eigen::VectorXd oracle_ar_at(const Tensor& x, const Tensor& targets, const std::vector<std::size_t>& members,
                             std::size_t k, double alpha, std::size_t row) {
  const std::size_t n = x.cols(), d = k * n;
  auto lags = [&](std::size_t m) {
    Eigen::VectorXd v(d + 1);
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t c = 0; c < n; ++c) v(l * n + c) = m >= l ? x(m - l, c) : 0.0;
    v(d) = 1.0;
    return v;
  };
  Eigen::MatrixXd a(members.size(), d + 1), y(members.size(), n);
  for (std::size_t r = 0; r < members.size(); ++r) {
    a.row(r) = lags(members[r]).transpose();
    for (std::size_t c = 0; c < n; ++c) y(r, c) = targets(members[r], c);
  }
  Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (std::size_t i = 0; i < d; ++i) pen(i, i) = alpha;
  const Eigen::MatrixXd beta = (a.transpose() * a + pen).ldlt().solve(a.transpose() * y);
  return beta.transpose() * lags(row);
}

}  // namespace

// ------------------------------------------------------------ total variation

TEST(TotalVariation, Examples) {
  EXPECT_DOUBLE_EQ(total_variation(Tensor::matrix({{0.0}, {1.0}, {0.0}})), 1.0);
  EXPECT_EQ(total_variation(Tensor::matrix({{2.0, -1.0}, {2.0, -1.0}, {2.0, -1.0}})), 0.0);
  EXPECT_DOUBLE_EQ(total_variation(Tensor::matrix({{0.0, 0.0}, {1.0, -3.0}})), 2.0);
}

TEST(TotalVariation, MatchesDirectLoop) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 2 + trial % 7, d = 1 + trial % 5;
    const Tensor s = random_matrix(rng, h, d);
    double oracle = 0.0;
    for (std::size_t j = 1; j < h; ++j)
      for (std::size_t c = 0; c < d; ++c) oracle += std::abs(s(j, c) - s(j - 1, c)) / static_cast<double>(d * (h - 1));
    EXPECT_NEAR(total_variation(s), oracle, 1e-14);
  }
}

TEST(TotalVariation, NonnegativeZeroIffConstantAndHomogeneous) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s = random_matrix(rng, 5, 3);
    const double tv = total_variation(s);
    EXPECT_GT(tv, 0.0);
    for (double c : {-2.5, 0.5, 3.0}) {
      Tensor scaled = s;
      for (double& v : scaled.storage()) v *= c;
      EXPECT_NEAR(total_variation(scaled), std::abs(c) * tv, 1e-13);
    }
    for (std::size_t j = 1; j < 5; ++j)
      for (std::size_t c = 0; c < 3; ++c) s(j, c) = s(0, c);
    EXPECT_EQ(total_variation(s), 0.0);
  }
}

TEST(TotalVariation, NeedsTwoPoints) {
  EXPECT_THROW(total_variation(Tensor::matrix({{1.0, 2.0}})), EvalError);
}

// ---------------------------------------------------------------------- error

TEST(ErrorRmse, PerfectGeneratorIsZero) {
  Rng rng(3);
  const auto g = ar2_1ch(1.1, -0.4, 0.05);
  const auto windows = ar_windows(g, 6, 15, rng);
  EXPECT_LE(error_rmse(GlobalARModel(g), windows, 5), 1e-14);
}

TEST(ErrorRmse, ZeroGeneratorAgainstConstantTargets) {
  for (std::size_t n : {1u, 3u}) {
    std::vector<Tensor> windows(4, Tensor::matrix(9, n, 0.5));
    const GlobalARModel zero(explainer::ARCoefficients::zeros(2, n, true));
    EXPECT_NEAR(error_rmse(zero, windows, 3), 0.5, 1e-15);
  }
}

TEST(ErrorRmse, MatchesTripleLoopOracle) {
  Rng rng(4);
  for (auto p : {Parameterization::implicit, Parameterization::explicit_ar}) {
    SequenceModel m(tiny(2, p, 2, 5));
    const auto windows = random_windows(rng, 5, 11, 2);
    double s = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows) {
      Tensor prefix = Tensor::matrix(6, 2);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t c = 0; c < 2; ++c) prefix(i, c) = w(i, c);
      const Tensor gen = m.generate_greedy(prefix, 5);
      for (std::size_t h = 0; h < 5; ++h)
        for (std::size_t c = 0; c < 2; ++c) {
          s += (gen(h, c) - w(6 + h, c)) * (gen(h, c) - w(6 + h, c));
          ++count;
        }
    }
    EXPECT_NEAR(error_rmse(m, windows, 6), std::sqrt(s / static_cast<double>(count)), 1e-12);
  }
}

TEST(ErrorRmse, RejectsEmptyAndMismatchedSplits) {
  SequenceModel m(tiny(2, Parameterization::implicit, 1, 1));
  EXPECT_THROW(error_rmse(m, {}, 3), EvalError);
  EXPECT_THROW(error_rmse(m, {Tensor::matrix(8, 3)}, 3), EvalError);
  EXPECT_THROW(error_rmse(m, {Tensor::matrix(8, 2)}, 8), EvalError);
}

// ------------------------------------------------------------------ deviation

TEST(Deviation, GlobalArModelHasNone) {
  // Undamped oscillation around an offset keeps every local design well posed.
  Rng rng(5);
  const auto g = ar2_1ch(2.0 * std::cos(0.9), -1.0, 0.2);
  const auto windows = ar_windows(g, 8, 30, rng);
  const GlobalARModel model(g);
  const auto cfg = eval_cfg(2, 4, 1e-8);
  EXPECT_LE(deviation_rmse(model, windows, 10, cfg), 1e-6);
  const auto rep = evaluate(model, windows, 10, cfg);
  EXPECT_LE(rep.deviation_rmse, 1e-6);
  EXPECT_LE(rep.tv, 1e-6);
}

TEST(Deviation, FittedGlobalArBaselineHasNone) {
  // The baseline is fit on noisy data, then explained along its own rollouts.
  Rng rng(6);
  std::vector<Tensor> windows;
  for (int w = 0; w < 10; ++w) {
    Tensor t = Tensor::matrix(40, 2);
    for (std::size_t i = 1; i < 40; ++i) {
      t(i, 0) = 0.7 * t(i - 1, 0) + 0.1 * t(i - 1, 1) + 0.3 * rng.normal();
      t(i, 1) = -0.2 * t(i - 1, 0) + 0.5 * t(i - 1, 1) + 0.3 * rng.normal();
    }
    windows.push_back(t);
  }
  const auto model = predictor::fit_global_ar(windows, 2, 1e-3);
  const auto rep = evaluate(model, windows, 25, eval_cfg(2, 3, 1e-8));
  // Rollouts decay towards a fixed point, so the refit design is nearly
  // collinear; the residual stays below 0.0005e-2.
  EXPECT_LE(rep.deviation_rmse, 5e-6);
  EXPECT_EQ(rep.tv, 0.0);
}

TEST(Deviation, MatchesRefitOracle) {
  Rng rng(7);
  SequenceModel m(tiny(2, Parameterization::implicit, 2, 8));
  const auto windows = random_windows(rng, 4, 16, 2);
  const auto cfg = eval_cfg(2, 2, 0.5);
  const auto rollouts = m.rollout(windows, 8);
  double s = 0.0;
  std::size_t count = 0;
  for (const auto& r : rollouts) {
    for (std::size_t j = 7; j + 1 < 16; ++j) {
      std::vector<std::size_t> members;
      for (std::size_t q = j - 2; q <= std::min<std::size_t>(j + 2, 15); ++q) members.push_back(q);
      const auto pred = oracle_ar_at(r.trajectory, r.outputs.mean, members, 2, 0.5, j);
      for (std::size_t c = 0; c < 2; ++c) {
        s += (r.outputs.mean(j, c) - pred(c)) * (r.outputs.mean(j, c) - pred(c));
        ++count;
      }
    }
  }
  EXPECT_NEAR(deviation_rmse(m, windows, 8, cfg), std::sqrt(s / static_cast<double>(count)), 1e-8);
}

TEST(Deviation, ExplicitConsistentHeadsHaveNoneAndNoTv) {
  // Heads fixed to two undamped oscillators at different frequencies.
  SequenceModel m(tiny(2, Parameterization::explicit_ar, 2, 9));
  for (auto& p : m.parameters()) std::fill(p.storage().begin(), p.storage().end(), 0.0);
  Rng rng(9);
  Tensor& theta = m.parameter("head.theta.bias");
  theta[0] = 2.0 * std::cos(0.9);
  theta[3] = 2.0 * std::cos(2.1);
  theta[4] = -1.0;
  theta[7] = -1.0;
  m.parameter("head.theta0.bias")[0] = 0.1;
  m.parameter("head.theta0.bias")[1] = -0.3;
  const auto windows = random_windows(rng, 3, 20, 2);
  // Ridge shrinkage alone is ~alpha relative on a unit-scale design.
  const auto rep = evaluate(m, windows, 8, eval_cfg(2, 3, 1e-12));
  EXPECT_LE(rep.deviation_rmse, 1e-10);
  EXPECT_EQ(rep.tv, 0.0);
}

TEST(Deviation, ExplicitReportsSumOfParts) {
  Rng rng(10);
  SequenceModel m(tiny(1, Parameterization::explicit_ar, 2, 10));
  const auto windows = random_windows(rng, 3, 14, 1);
  const auto cfg = eval_cfg(2, 2, 0.5);
  const auto rollouts = m.rollout(windows, 6);
  double sa = 0.0, sc = 0.0;
  std::size_t count = 0;
  for (const auto& r : rollouts) {
    const auto ex = detail::explain_rollout(r, cfg, 6, true);
    for (std::size_t i = 0; i < ex.deviation_ar.size(); ++i) {
      sa += ex.deviation_ar[i];
      sc += ex.deviation_const[i];
      ++count;
    }
  }
  EXPECT_GT(sc, 0.0);
  EXPECT_NEAR(deviation_rmse(m, windows, 6, cfg),
              std::sqrt(sa / static_cast<double>(count)) + std::sqrt(sc / static_cast<double>(count)), 1e-14);
}

TEST(Deviation, HorizonTooShortForAnyExplainerRow) {
  SequenceModel m(tiny(1, Parameterization::implicit, 1, 11));
  const std::vector<Tensor> windows{Tensor::matrix(3, 1, 0.2)};
  EXPECT_THROW(deviation_rmse(m, windows, 1, eval_cfg(5, 1, 1.0)), EvalError);
}

// ------------------------------------------------------------------- evaluate

TEST(Evaluate, MetricsInvariantToSequenceOrder) {
  Rng rng(12);
  for (auto p : {Parameterization::implicit, Parameterization::explicit_ar}) {
    SequenceModel m(tiny(2, p, 2, 12));
    auto windows = random_windows(rng, 7, 14, 2);
    const auto cfg = eval_cfg(2, 2, 0.5);
    const auto a = evaluate(m, windows, 6, cfg);
    std::reverse(windows.begin(), windows.end());
    std::rotate(windows.begin(), windows.begin() + 3, windows.end());
    const auto b = evaluate(m, windows, 6, cfg);
    EXPECT_EQ(a.error_rmse, b.error_rmse);
    EXPECT_EQ(a.deviation_rmse, b.deviation_rmse);
    EXPECT_EQ(a.tv, b.tv);
    EXPECT_EQ(a.error_series, b.error_series);
    EXPECT_EQ(a.deviation_series, b.deviation_series);
    EXPECT_EQ(a.tv_series, b.tv_series);
  }
}

TEST(Evaluate, ConsistentWithStandaloneMetrics) {
  Rng rng(13);
  SequenceModel m(tiny(2, Parameterization::implicit, 2, 13));
  const auto windows = random_windows(rng, 5, 16, 2);
  const auto cfg = eval_cfg(2, 2, 0.5);
  const auto rep = evaluate(m, windows, 8, cfg, "tiny");
  EXPECT_NEAR(rep.error_rmse, error_rmse(m, windows, 8), 1e-14);
  EXPECT_NEAR(rep.deviation_rmse, deviation_rmse(m, windows, 8, cfg), 1e-14);
  EXPECT_EQ(rep.model_descriptor, "tiny");
  EXPECT_EQ(rep.error_series.size(), 8u);
  EXPECT_EQ(rep.deviation_series.size(), 8u);
  EXPECT_EQ(rep.tv_series.size(), 8u);
  EXPECT_EQ(rep.tv_series.front(), 0.0);
  for (double v : rep.error_series) EXPECT_GE(v, 0.0);
  for (double v : rep.deviation_series) EXPECT_GE(v, 0.0);
  EXPECT_GT(rep.tv, 0.0);
  // tv is the per-sequence average of the mean change; its per-step series sums to tv * (H-1).
  double sum = 0.0;
  for (double v : rep.tv_series) sum += v;
  EXPECT_NEAR(sum / 7.0, rep.tv, 1e-12);
}

TEST(Evaluate, NeighborhoodSpanFlag) {
  Rng rng(14);
  SequenceModel m(tiny(1, Parameterization::implicit, 2, 14));
  const auto windows = random_windows(rng, 2, 37, 1);
  EXPECT_TRUE(evaluate(m, windows, 30, eval_cfg(2, 6, 1.0)).neighborhood_spans_horizon);
  const auto wide = random_windows(rng, 2, 100, 1);
  EXPECT_FALSE(evaluate(m, wide, 80, eval_cfg(2, 9, 1.0)).neighborhood_spans_horizon);
}

TEST(Report, RoundTripsLosslessly) {
  Rng rng(15);
  SequenceModel m(tiny(1, Parameterization::implicit, 2, 15));
  const auto windows = random_windows(rng, 3, 12, 1);
  auto rep = evaluate(m, windows, 5, eval_cfg(2, 2, 0.5), "implicit");
  rep.config_echo = {"game.lambda = 1", "data.seed = 7"};
  const std::string text = format_report(rep);
  const auto back = parse_report(text);
  EXPECT_EQ(back.error_rmse, rep.error_rmse);
  EXPECT_EQ(back.deviation_rmse, rep.deviation_rmse);
  EXPECT_EQ(back.tv, rep.tv);
  EXPECT_EQ(back.error_series, rep.error_series);
  EXPECT_EQ(back.deviation_series, rep.deviation_series);
  EXPECT_EQ(back.tv_series, rep.tv_series);
  EXPECT_EQ(back.config_echo, rep.config_echo);
  EXPECT_EQ(back.neighborhood_spans_horizon, rep.neighborhood_spans_horizon);
  EXPECT_EQ(format_report(back), text);
}

TEST(Report, RejectsForeignOrIncompleteText) {
  EXPECT_THROW(parse_report("hello\n"), EvalError);
  EXPECT_THROW(parse_report(std::string(kReportHeader) + "\nmodel = x\n"), EvalError);
}

TEST(Report, StepTableHasOneRowPerStep) {
  Rng rng(16);
  SequenceModel m(tiny(1, Parameterization::implicit, 2, 16));
  const auto windows = random_windows(rng, 2, 12, 1);
  const auto rep = evaluate(m, windows, 5, eval_cfg(2, 2, 0.5));
  std::istringstream in(format_step_table(rep, {"config.x = 1"}));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config.x = 1");
  std::getline(in, line);
  EXPECT_EQ(line, "step,error,deviation,tv,param_0,param_1,param_2");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 7u);
}

TEST(Report, ExplainerDumpListsEveryCenter) {
  Rng rng(17);
  SequenceModel m(tiny(1, Parameterization::implicit, 2, 17));
  const auto windows = random_windows(rng, 2, 12, 1);
  const auto rep = evaluate(m, windows, 5, eval_cfg(2, 2, 0.5));
  EXPECT_EQ(rep.explainer_records.size(), 14u);
  std::ostringstream os;
  explainer::write_explainer_dump(os, rep.explainer_records);
  const std::string text = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 15u);
}
