// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "coop/cli/commands.hpp"
#include "coop/data/synth.hpp"
#include "coop/eval/metrics.hpp"
#include "coop/explainer/explainer.hpp"
#include "coop/game/fixed_point.hpp"
#include "coop/game/objective.hpp"
#include "coop/game/train.hpp"
#include "coop/numerics/grad_check.hpp"
#include "coop/numerics/linalg.hpp"
#include "coop/predictor/global_ar.hpp"
#include "coop/predictor/model.hpp"
#include "coop/predictor/nll.hpp"

using namespace coop;
using game::GameConfig;
using game::GameMode;
using predictor::Parameterization;
using predictor::PredictorConfig;
using predictor::SequenceModel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.storage()) v = rng.normal();
  return t;
}

PredictorConfig tiny(std::size_t n, Parameterization p, std::size_t k, std::uint64_t seed) {
  PredictorConfig c;
  c.channels = n;
  c.conv_width = 2;
  c.conv_filters = 3;
  c.hidden = 3;
  c.dense1 = 4;
  c.dense2 = 3;
  c.parameterization = p;
  c.ar_order = k;
  c.seed = seed;
  return c;
}

GameConfig game_cfg(GameMode mode, Parameterization p, std::size_t k, std::size_t eps, double lambda) {
  GameConfig g;
  g.mode = mode;
  g.parameterization = p;
  g.markov_order = k;
  g.epsilon = eps;
  g.lambda = lambda;
  g.ridge_alpha = 0.3;
  return g;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coop_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return files;
}

std::vector<std::string> data_rows(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

const fs::path kDeskConfig = fs::path(COOP_SOURCE_DIR) / "configs" / "bearing_desk.ini";

// ------------------------------------------------------------------------ 1

Outcome gradients() {
  using F = ScalarFunction;
  struct Case {
    const char* name;
    F f;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
  };
  const std::vector<Case> cases = {
      {"add", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(v[0] + v[1])); }, {{2, 3}, {2, 3}}},
      {"sub", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(v[0] - v[1])); }, {{2, 3}, {2, 3}}},
      {"mul", [](Tape&, std::span<const Var> v) { return ops::sum(v[0] * v[1]); }, {{3, 2}, {3, 2}}},
      {"scale", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(2.5 * v[0])); }, {{2, 2}}},
      {"shift", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::shift(v[0], -0.7))); }, {{2, 2}}},
      {"add_row", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::add_row(v[0], v[1]))); },
       {{3, 2}, {1, 2}}},
      {"mul_col", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::mul_col(v[0], v[1]))); },
       {{3, 2}, {3, 1}}},
      {"matmul", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::matmul(v[0], v[1]))); },
       {{2, 3}, {3, 4}}},
      {"sigmoid", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::sigmoid(v[0]))); }, {{2, 3}}},
      {"tanh", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::tanh(v[0]))); }, {{2, 3}}},
      {"exp", [](Tape&, std::span<const Var> v) { return ops::sum(ops::exp(v[0])); }, {{2, 3}}},
      {"square", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(v[0])); }, {{2, 3}}},
      {"sum", [](Tape&, std::span<const Var> v) { return ops::square(ops::sum(v[0])); }, {{2, 3}}},
      {"concat_cols",
       [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::concat_cols({v[0], v[1], v[0]}))); },
       {{2, 1}, {2, 3}}},
      {"slice_cols", [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::slice_cols(v[0], 1, 2))); },
       {{2, 4}}},
      {"ar_combine",
       [](Tape&, std::span<const Var> v) { return ops::sum(ops::square(ops::ar_combine(v[0], v[1], 2, 2))); },
       {{3, 8}, {3, 4}}},
      {"gaussian_nll",
       [](Tape&, std::span<const Var> v) { return predictor::gaussian_nll(v[0], v[1], v[2]); },
       {{4, 2}, {4, 2}, {4, 2}}},
  };
  Rng rng(101);
  double worst = 0.0;
  std::size_t checks = 0;
  std::string failed;
  for (const auto& c : cases)
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Tensor> point;
      for (auto [r, k] : c.shapes) point.push_back(random_matrix(rng, r, k));
      const auto rep = grad_check(c.f, point, 1e-5, 1e-4);
      worst = std::max(worst, rep.max_relative_error);
      ++checks;
      if (!rep.passed && failed.empty()) failed = c.name;
    }

  // Full objectives on toy sequences with best responses held at the evaluation point.
  for (auto p : {Parameterization::implicit, Parameterization::explicit_ar})
    for (auto mode : {GameMode::asymmetric, GameMode::symmetric}) {
      SequenceModel m(tiny(2, p, 2, 150));
      const Tensor x0 = random_matrix(rng, 9, 2), x1 = random_matrix(rng, 9, 2);
      const std::vector<const Tensor*> batch{&x0, &x1};
      const auto g = game_cfg(mode, p, 2, 2, 0.8);
      std::vector<game::PenaltyTerms> frozen;
      {
        Tape tape;
        const auto b = m.bind(tape, false);
        game::game_objective(tape, m, b, batch, {1, 1}, g, 4, true, nullptr, nullptr, &frozen);
      }
      auto f = [&](Tape& tape, std::span<const Var> params) {
        SequenceModel::Bound b;
        b.params.assign(params.begin(), params.end());
        return game::game_objective(tape, m, b, batch, {1, 1}, g, 4, true, &frozen);
      };
      const auto rep = grad_check(f, m.parameters(), 1e-5, 1e-4);
      worst = std::max(worst, rep.max_relative_error);
      ++checks;
      if (!rep.passed && failed.empty())
        failed = std::string(predictor::parameterization_name(p)) + " " + game::mode_name(mode) + " objective";
    }
  return {failed.empty(), std::to_string(checks) + " checks, max relative error " + sci(worst) +
                              (failed.empty() ? "" : ", first failure: " + failed)};
}

// ------------------------------------------------------------------------ 2

Outcome ridge_oracle() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 5 + rng.index(30), d = 1 + rng.index(6), n = 1 + rng.index(3);
    const double alpha = std::exp(rng.uniform(std::log(1e-3), std::log(1e2)));
    const bool intercept = trial % 2 == 0;
    const Tensor x = random_matrix(rng, m, d), y = random_matrix(rng, m, n);
    const auto s = solve_ridge({x, y, alpha, false, intercept});

    // Normal equations on the augmented design; the ones column is unpenalized.
    const std::size_t cols = d + (intercept ? 1 : 0);
    Eigen::MatrixXd a(m, cols), ye(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < d; ++j) a(i, j) = x(i, j);
      if (intercept) a(i, d) = 1.0;
      for (std::size_t c = 0; c < n; ++c) ye(i, c) = y(i, c);
    }
    Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(cols, cols);
    for (std::size_t j = 0; j < d; ++j) pen(j, j) = alpha;
    const Eigen::MatrixXd beta = (a.transpose() * a + pen).inverse() * a.transpose() * ye;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(s.coefficients(j, c) - beta(j, c)));
    if (intercept)
      for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(s.intercept(0, c) - beta(d, c)));
  }
  return {worst <= 1e-8, "100 problems, max abs diff " + sci(worst)};
}

// ------------------------------------------------------------------------ 3

data::TimeSeriesDataset noisy_sine_dataset(std::size_t windows, std::size_t input_len, std::size_t output_len,
                                           std::uint64_t seed) {
  data::TimeSeriesDataset ds;
  ds.input_len = input_len;
  ds.output_len = output_len;
  ds.channels = 1;
  ds.channel_names = {"x"};
  Rng rng(seed);
  for (std::size_t w = 0; w < windows; ++w) {
    Tensor t = Tensor::matrix(input_len + output_len, 1);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < t.rows(); ++i)
      t(i, 0) = std::sin(phase + 0.7 * static_cast<double>(i)) + 0.1 * rng.normal();
    ds.split(data::Split::train).push_back(t);
  }
  return ds;
}

Outcome lambda_zero() {
  const auto ds = noisy_sine_dataset(40, 8, 4, 303);
  double worst = 0.0;
  std::size_t steps = 50;
  for (auto mode : {GameMode::asymmetric, GameMode::symmetric}) {
    auto g = game_cfg(mode, Parameterization::implicit, 2, 2, 0.0);
    g.reg_fraction = 0.5;
    g.optimizer.learning_rate = 1e-2;
    g.optimizer.batch_size = 4;
    g.optimizer.epochs = 100;
    g.optimizer.max_steps = 50;
    g.seed = 9;
    std::vector<std::vector<Tensor>> game_traj, mle_traj;
    SequenceModel a(tiny(1, Parameterization::implicit, 2, 70)), b(tiny(1, Parameterization::implicit, 2, 70));
    game::TrainCallbacks ca, cb;
    ca.on_step = [&](std::size_t, const SequenceModel& m) { game_traj.push_back(m.parameters()); };
    cb.on_step = [&](std::size_t, const SequenceModel& m) { mle_traj.push_back(m.parameters()); };
    game::train(a, ds, g, ca);
    game::train_mle(b, ds, g, cb);
    if (game_traj.size() != 50 || mle_traj.size() != 50) {
      return {false, "expected 50 steps, got " + std::to_string(game_traj.size()) + " and " +
                         std::to_string(mle_traj.size())};
    }
    for (std::size_t s = 0; s < steps; ++s)
      for (std::size_t i = 0; i < game_traj[s].size(); ++i)
        worst = std::max(worst, max_abs_diff(game_traj[s][i], mle_traj[s][i]));
  }
  return {worst <= 1e-12, "asymmetric and symmetric, 50 steps, max abs diff " + sci(worst)};
}

// ------------------------------------------------------------------------ 4

Outcome ar_recovery() {
  // Lightly damped oscillation with an offset: x_t = a1 x_{t-1} + a2 x_{t-2} + 0.2.
  const double r = 0.99, w = 0.9;
  const double a1 = 2.0 * r * std::cos(w), a2 = -r * r, bias = 0.2;
  data::SynthSpec spec;
  spec.kind = data::SynthKind::ar_process;
  spec.length = 200;
  spec.noise_std = 0.0;
  spec.ar_coefficients = {Tensor({1, 1}, {a1}), Tensor({1, 1}, {a2})};
  spec.ar_intercept = {bias};
  spec.ar_initial = {{1.0}, {-0.5}};
  const Tensor x = data::synth_generate(spec).values;
  const std::size_t len = x.rows();

  // Targets at index i are x_{i+1}; the last row has no successor.
  Tensor inputs = Tensor::matrix(len - 1, 1), targets = Tensor::matrix(len - 1, 1);
  for (std::size_t i = 0; i + 1 < len; ++i) {
    inputs(i, 0) = x(i, 0);
    targets(i, 0) = x(i + 1, 0);
  }
  const auto nb = explainer::make_neighborhood(0, len, 0, len - 2);
  const auto g = explainer::fit_ar_explainer(inputs, targets, nb, 2, 1e-8);
  const double coef_err = std::max({std::abs(g.lags[0](0, 0) - a1), std::abs(g.lags[1](0, 0) - a2),
                                    std::abs(g.bias(0, 0) - bias)});
  double fit_dev = 0.0;
  for (std::size_t i = 1; i + 1 < len; ++i) {
    const double d = explainer::ar_predict(g, explainer::lag_row(inputs, i, 2))[0] - targets(i, 0);
    fit_dev += d * d;
  }
  fit_dev = std::sqrt(fit_dev / static_cast<double>(len - 2));

  // Deviation of the recovered model as a forecaster, explained along its own rollouts.
  std::vector<Tensor> windows;
  for (std::size_t s = 0; s + 40 <= len; s += 20) {
    Tensor wdw = Tensor::matrix(40, 1);
    for (std::size_t i = 0; i < 40; ++i) wdw(i, 0) = x(s + i, 0);
    windows.push_back(wdw);
  }
  GameConfig cfg;
  cfg.markov_order = 2;
  cfg.epsilon = 4;
  cfg.ridge_alpha = 1e-8;
  const predictor::GlobalARModel model(g);
  const auto rep = eval::evaluate(model, windows, 20, cfg);
  const bool ok = coef_err <= 1e-5 && fit_dev <= 1e-6 && rep.deviation_rmse <= 1e-6 && rep.tv <= 1e-6;
  return {ok, "coefficient error " + sci(coef_err) + ", fit deviation " + sci(fit_dev) + ", rollout deviation " +
                  sci(rep.deviation_rmse) + ", TV " + sci(rep.tv)};
}

// ------------------------------------------------------------------------ 5

Outcome sweep_trend() {
  const auto c = cli::load_experiment_config(kDeskConfig);
  const fs::path root = scratch("sweep");
  std::ostringstream out, err;
  const std::vector<double> lambdas{0.0, 0.1, 1.0, 10.0};
  const auto t0 = std::chrono::steady_clock::now();
  cli::cmd_prepare(c, root, out);
  const auto ds = cli::detail::load_prepared(c, root);
  const auto r = cli::cmd_sweep(c, lambdas, root, out, err);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!r.all_ok()) return {false, "sweep cell failed: " + err.str()};
  const std::size_t windows = ds.total_windows();

  std::ostringstream d;
  bool ok = windows <= 2000 && c.game.optimizer.epochs <= 200 && secs <= 900.0;
  for (std::size_t i = 0; i + 1 < r.cells.size(); ++i) {
    ok = ok && r.cells[i + 1].deviation <= 1.05 * r.cells[i].deviation;
    ok = ok && r.cells[i + 1].tv <= 1.05 * r.cells[i].tv;
  }
  ok = ok && r.cells.back().error > r.cells.front().error;
  d.precision(4);
  for (const auto& cell : r.cells)
    d << "lambda=" << cli::lambda_label(cell.lambda) << " (E " << cell.error << ", D " << cell.deviation << ", TV "
      << cell.tv << ") ";
  d << "| " << windows << " windows, " << c.game.optimizer.epochs << " epochs, " << static_cast<int>(secs) << " s";
  return {ok, d.str()};
}

// ------------------------------------------------------------------------ 6

Outcome fixed_point() {
  Rng rng(606);
  std::vector<std::vector<double>> inputs;
  inputs.push_back(std::vector<double>(30, 0.0));
  for (std::size_t t = 15; t < 30; ++t) inputs.back()[t] = 1.0;
  for (std::size_t len : {17u, 41u}) {
    std::vector<double> y(len);
    for (double& v : y) v = rng.normal();
    inputs.push_back(y);
  }
  double worst = 0.0;
  bool exact = true;
  for (const auto& y : inputs)
    for (auto mode : {GameMode::asymmetric, GameMode::symmetric})
      for (std::size_t eps : {1u, 3u}) {
        exact = exact && game::nonparametric_fixed_point(y, eps, 0.0, mode) == y;
        for (double lambda : {0.1, 1.0, 10.0}) {
          const auto f = game::nonparametric_fixed_point(y, eps, lambda, mode);
          worst = std::max(worst, game::stationarity_residual(f, y, eps, lambda, mode));
        }
      }

  // Step input: modes differ at lambda = 1 and the gap shrinks to nothing with lambda.
  const auto& step = inputs.front();
  double min_gap = 1e300, small_gap = 0.0;
  bool shrinking = true;
  for (std::size_t eps : {1u, 3u}) {
    auto gap = [&](double lambda) {
      const auto a = game::nonparametric_fixed_point(step, eps, lambda, GameMode::asymmetric);
      const auto s = game::nonparametric_fixed_point(step, eps, lambda, GameMode::symmetric);
      double g = 0.0;
      for (std::size_t t = 0; t < step.size(); ++t) g = std::max(g, std::abs(a[t] - s[t]));
      return g;
    };
    min_gap = std::min(min_gap, gap(1.0));
    double prev = gap(0.1);
    for (double lambda : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const double cur = gap(lambda);
      shrinking = shrinking && cur < prev;
      prev = cur;
    }
    small_gap = std::max(small_gap, prev);
  }
  const bool ok = worst <= 1e-9 && exact && min_gap > 1e-3 && shrinking && small_gap <= 1e-7;
  return {ok, "max residual " + sci(worst) + ", lambda=0 exact: " + (exact ? "yes" : "no") +
                  ", step gap at lambda=1 " + sci(min_gap) + ", at lambda=1e-8 " + sci(small_gap)};
}

// ------------------------------------------------------------------------ 7

Outcome explicit_consistency() {
  Rng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(3), k = 1 + rng.index(4), len = 2 + rng.index(12);
    SequenceModel m(tiny(n, Parameterization::explicit_ar, k, 700 + static_cast<std::uint64_t>(trial)));
    for (auto& t : m.parameters())
      for (double& v : t.storage()) v += 0.3 * rng.normal();
    const Tensor x = random_matrix(rng, len, n);
    const auto out = m.forward(x);
    for (std::size_t j = 0; j < len; ++j)
      for (std::size_t r = 0; r < n; ++r) {
        double mu = out.theta0(j, r);
        for (std::size_t q = 0; q < k && q <= j; ++q)
          for (std::size_t c = 0; c < n; ++c) mu += out.theta(j, q * n * n + r * n + c) * x(j - q, c);
        worst = std::max(worst, std::abs(out.mean(j, r) - mu));
      }
  }
  return {worst <= 1e-12, "100 forward passes, max abs diff " + sci(worst)};
}

// ------------------------------------------------------------------------ 8

// Penalty gradient with respect to each step's mean; a single center at index 6
// whose neighborhood is 4..7.
std::vector<Tensor> penalty_grad_wrt_means(GameMode mode) {
  const std::size_t input_len = 7, len = 8;
  SequenceModel m(tiny(1, Parameterization::implicit, 1, 808));
  Rng rng(808);
  const Tensor x = random_matrix(rng, len, 1);
  const auto g = game_cfg(mode, Parameterization::implicit, 1, 2, 1.0);
  const auto o = m.forward(x);
  Tape tape;
  std::vector<predictor::StepVars> steps(len);
  for (std::size_t j = 0; j < len; ++j) {
    steps[j].mean = tape.variable(o.mean.row_copy(j));
    steps[j].logvar = tape.constant(o.logvar.row_copy(j));
  }
  const Var total = game::objective_from_steps(tape, steps, false, {&x}, {1}, g, input_len, true);
  const Var nll = game::objective_from_steps(tape, steps, false, {&x}, {1}, g, input_len, false);
  const auto gr = tape.backward(total - nll);
  std::vector<Tensor> out;
  for (const auto& s : steps) out.push_back(gr[s.mean]);
  return out;
}

Outcome detachment() {
  const auto asym = penalty_grad_wrt_means(GameMode::asymmetric);
  const auto sym = penalty_grad_wrt_means(GameMode::symmetric);
  double asym_off = 0.0, sym_off = 1e300;
  for (std::size_t j : {4u, 5u, 7u}) {
    asym_off = std::max(asym_off, max_abs(asym[j]));
    sym_off = std::min(sym_off, max_abs(sym[j]));
  }
  const double asym_center = max_abs(asym[6]);
  const bool ok = asym_off == 0.0 && asym_center > 0.0 && sym_off > 0.0;
  return {ok, "asymmetric off-center " + sci(asym_off) + " (center " + sci(asym_center) +
                  "), symmetric off-center min " + sci(sym_off)};
}

// ------------------------------------------------------------------------ 9

int run_cli(const std::string& args, const fs::path& root) {
  const std::string cmd = std::string("COOP_OUTPUT_ROOT='") + root.string() + "' '" + COOP_CLI_PATH + "' " + args +
                          " > '" + (root / "stdout.txt").string() + "' 2> '" + (root / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome pipeline() {
  const auto c = cli::load_experiment_config(kDeskConfig);
  std::map<std::string, std::string> trees[2];
  const auto t0 = std::chrono::steady_clock::now();
  for (int run = 0; run < 2; ++run) {
    const fs::path root = scratch("pipeline_" + std::to_string(run));
    const std::string cfg = "--config '" + kDeskConfig.string() + "'";
    for (const std::string cmd : {"prepare", "train", "evaluate", "sweep"}) {
      const int code = run_cli(cmd + " " + cfg, root);
      if (code != 0) return {false, cmd + " exited " + std::to_string(code) + ": " + read_file(root / "stderr.txt")};
    }
    fs::remove(root / "stdout.txt");
    fs::remove(root / "stderr.txt");
    trees[run] = snapshot_tree(root);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string summary_key = (fs::path(c.eval.output_dir) / c.eval.summary_file).generic_string();
  const auto it = trees[0].find(summary_key);
  if (it == trees[0].end()) return {false, "no summary at " + summary_key};
  const auto rows = data_rows(it->second);
  bool shaped = rows.size() == 4 && rows[0].rfind("metric,", 0) == 0;
  const char* names[] = {"Error,", "Deviation,", "TV,"};
  for (std::size_t i = 1; shaped && i < 4; ++i)
    shaped = rows[i].rfind(names[i - 1], 0) == 0 && std::count(rows[i].begin(), rows[i].end(), ',') == 4;
  const bool identical = trees[0] == trees[1];
  const bool ok = shaped && identical && secs <= 1200.0;
  return {ok, std::to_string(trees[0].size()) + " files, summary " + (shaped ? "3x4" : "misshaped") + ", rerun " +
                  (identical ? "byte-identical" : "differs") + ", " + std::to_string(static_cast<int>(secs)) +
                  " s for two runs"};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {gradients,   ridge_oracle,         lambda_zero,
                                                          ar_recovery, sweep_trend,          fixed_point,
                                                          explicit_consistency, detachment, pipeline};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / ("coop_acceptance_" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
