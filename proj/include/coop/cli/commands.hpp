#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coop/cli/experiment_config.hpp"
#include "coop/data/cache.hpp"
#include "coop/data/csv.hpp"
#include "coop/data/synth.hpp"
#include "coop/data/transform.hpp"
#include "coop/data/windowing.hpp"
#include "coop/eval/report.hpp"
#include "coop/explainer/dump.hpp"
#include "coop/game/fixed_point.hpp"
#include "coop/game/train.hpp"
#include "coop/predictor/global_ar.hpp"
#include "coop/predictor/io.hpp"

namespace coop::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutputRootEnv = "COOP_OUTPUT_ROOT";

/// $COOP_OUTPUT_ROOT, or the working directory.
inline fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::current_path();
}

inline fs::path cache_dir(const ExperimentConfig& c, const fs::path& root) { return root / c.data.cache_dir; }
inline fs::path run_dir(const ExperimentConfig& c, const fs::path& root) { return root / c.eval.output_dir; }

namespace detail {

inline std::vector<std::string> commented(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines) out.push_back("config." + l);
  return out;
}

inline data::TimeSeriesDataset build_dataset(const ExperimentConfig& c) {
  std::vector<data::RawSeries> series;
  if (c.data.source == "synth") {
    data::SynthSpec s;
    s.kind = c.data.synth_kind;
    s.channels = c.data.synth_channels;
    s.length = c.data.synth_length;
    s.noise_std = c.data.synth_noise;
    s.periods = c.data.synth_periods;
    s.seed = c.data.seed;
    series.push_back(data::synth_generate(s));
  } else {
    fs::path p = c.data.csv_path;
    if (p.is_relative() && !c.base_dir.empty()) p = c.base_dir / p;
    std::optional<std::string> group;
    if (!c.data.csv_group.empty()) group = c.data.csv_group;
    series = data::load_csv_series(p, c.data.csv_channels, group);
  }
  if (c.data.pct_change)
    for (auto& s : series) s = data::pct_change(s);
  return data::window_split(series, c.data.input_len, c.data.output_len, c.data.stride, c.data.split, c.data.seed);
}

inline data::TimeSeriesDataset load_prepared(const ExperimentConfig& c, const fs::path& root) {
  const fs::path dir = cache_dir(c, root);
  if (!fs::exists(dir / "manifest.txt")) {
    throw data::DataError("no prepared dataset at " + dir.string() + " (run prepare first)");
  }
  auto ds = data::load_dataset_cache(dir);
  if (ds.input_len != c.data.input_len || ds.output_len != c.data.output_len) {
    throw data::DataError("prepared dataset window lengths differ from the config (rerun prepare)");
  }
  return ds;
}

inline const std::vector<Tensor>& eval_windows(const ExperimentConfig& c, const data::TimeSeriesDataset& ds) {
  const auto& w = ds.split(c.eval.split == "val" ? data::Split::val : data::Split::test);
  if (w.empty()) throw data::DataError("the " + c.eval.split + " split is empty");
  return w;
}

inline std::string with_prefix(const std::string& file, const std::string& prefix) {
  return prefix.empty() ? file : prefix + file;
}

}  // namespace detail

inline fs::path cmd_prepare(const ExperimentConfig& c, const fs::path& root, std::ostream& out = std::cout) {
  const auto ds = detail::build_dataset(c);
  const fs::path dir = cache_dir(c, root);
  data::save_dataset_cache(dir, ds, c.data.seed, detail::commented(echo_lines(c)));
  out << "prepared " << dir.string() << ": " << ds.split(data::Split::train).size() << " train, "
      << ds.split(data::Split::val).size() << " val, " << ds.split(data::Split::test).size()
      << " test windows of " << ds.input_len << "+" << ds.output_len << " rows, " << ds.channels << " channel(s)\n";
  return dir;
}

struct TrainResult {
  fs::path model_path;
  fs::path log_path;
  game::TrainLog log;
  std::vector<fs::path> checkpoints;
};

inline TrainResult cmd_train(ExperimentConfig c, const fs::path& root, std::ostream& out = std::cout) {
  const auto ds = detail::load_prepared(c, root);
  c.model.channels = ds.channels;
  predictor::SequenceModel model(c.model);
  TrainResult r;
  const auto echo = echo_lines(c);
  const fs::path dir = run_dir(c, root);
  game::TrainCallbacks cb;
  if (c.eval.checkpoint_every > 0) {
    cb.on_epoch = [&](const game::EpochRecord& rec, const predictor::SequenceModel& m) {
      if (rec.epoch % c.eval.checkpoint_every != 0) return;
      const fs::path p = dir / ("checkpoint_epoch_" + std::to_string(rec.epoch) + ".json");
      predictor::save_model(m, p, nlohmann::json{{"config", echo}, {"epoch", rec.epoch}});
      r.checkpoints.push_back(p);
    };
  }
  r.log = game::train(model, ds, c.game, cb);

  r.model_path = dir / c.eval.model_file;
  r.log_path = dir / c.eval.log_file;
  predictor::save_model(model, r.model_path, nlohmann::json{{"config", echo}});
  write_file_atomic(r.log_path, game::format_train_log(r.log, detail::commented(echo)));
  const double last = r.log.epochs.empty() ? std::nan("") : r.log.epochs.back().val_error;
  out << "trained " << r.log.epochs.size() << " epoch(s); final validation error " << format_double(last) << "\n";
  return r;
}

struct EvaluateResult {
  eval::EvalReport report;
  fs::path report_path;
  fs::path table_path;
  fs::path explainer_path;
};

/// `ar_baseline` replaces the network by one ridge AR(K) model fit on the
/// training split. Its explainers are refit with a vanishing ridge strength,
/// since the baseline already lies in the explainer family.
inline EvaluateResult cmd_evaluate(const ExperimentConfig& c, const fs::path& root,
                                   std::optional<fs::path> model_path = {}, bool ar_baseline = false,
                                   std::ostream& out = std::cout) {
  const auto ds = detail::load_prepared(c, root);
  const auto& windows = detail::eval_windows(c, ds);
  auto echo = echo_lines(c);
  EvaluateResult r;
  std::string prefix;
  if (ar_baseline) {
    game::GameConfig gc = c.game;
    gc.ridge_alpha = 1e-8;
    const auto ar = predictor::fit_global_ar(ds.split(data::Split::train), c.game.markov_order, c.game.ridge_alpha);
    r.report = eval::evaluate(ar, windows, ds.input_len, gc, "ar_baseline");
    prefix = "ar_baseline_";
    echo.push_back("eval.explainer_ridge_alpha = 1e-08");
  } else {
    const fs::path mp = model_path ? *model_path : run_dir(c, root) / c.eval.model_file;
    if (!fs::exists(mp)) throw IoError("model file " + mp.string() + " does not exist");
    const auto model = predictor::load_model(mp, ds.channels);
    if (model.is_explicit() != c.model.is_explicit()) {
      throw eval::EvalError("model parameterization differs from the config");
    }
    game::GameConfig gc = c.game;
    gc.parameterization = model.config().parameterization;
    r.report = eval::evaluate(model, windows, ds.input_len, gc,
                              std::string(predictor::parameterization_name(model.config().parameterization)) + "_" +
                                  game::mode_name(c.game.mode));
  }
  r.report.config_echo = echo;

  const fs::path dir = run_dir(c, root);
  r.report_path = dir / detail::with_prefix(c.eval.report_file, prefix);
  r.table_path = dir / detail::with_prefix(c.eval.table_file, prefix);
  r.explainer_path = dir / detail::with_prefix(c.eval.explainer_file, prefix);
  const auto header = detail::commented(echo);
  write_file_atomic(r.report_path, eval::format_report(r.report));
  write_file_atomic(r.table_path, eval::format_step_table(r.report, header));
  std::ostringstream dump;
  for (const auto& line : header) dump << "# " << line << "\n";
  explainer::write_explainer_dump(dump, r.report.explainer_records);
  write_file_atomic(r.explainer_path, dump.str());

  out << "error " << format_double(r.report.error_rmse) << "\n";
  out << "deviation " << format_double(r.report.deviation_rmse) << "\n";
  out << "tv " << format_double(r.report.tv) << (r.report.neighborhood_spans_horizon ? " (neighborhood spans horizon)" : "")
      << "\n";
  return r;
}

struct SweepCell {
  double lambda = 0.0;
  bool ok = false;
  double error = 0.0, deviation = 0.0, tv = 0.0;
  std::string failure;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  fs::path summary_path;
  bool all_ok() const {
    for (const auto& c : cells)
      if (!c.ok) return false;
    return true;
  }
};

inline std::string lambda_label(double lambda) { return format_double(lambda); }

/// Summary: one column per lambda, rows Error, Deviation, TV. Failed cells read FAILED.
inline std::string format_sweep_summary(const std::vector<SweepCell>& cells, const std::vector<std::string>& header) {
  std::ostringstream os;
  for (const auto& line : header) os << "# " << line << "\n";
  os << "metric";
  for (const auto& c : cells) os << ",lambda=" << lambda_label(c.lambda);
  os << "\n";
  const char* names[] = {"Error", "Deviation", "TV"};
  for (int m = 0; m < 3; ++m) {
    os << names[m];
    for (const auto& c : cells) {
      const double v = m == 0 ? c.error : (m == 1 ? c.deviation : c.tv);
      os << "," << (c.ok ? format_double(v) : std::string("FAILED"));
    }
    os << "\n";
  }
  return os.str();
}

/// Cell i trains and evaluates into <output_dir>/lambda_<value>/ with the
/// shared seed. A failed cell does not stop the sweep.
inline SweepResult cmd_sweep(const ExperimentConfig& c, const std::vector<double>& lambdas, const fs::path& root,
                             std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (lambdas.empty()) throw ConfigError("sweep needs at least one lambda");
  SweepResult r;
  for (double lambda : lambdas) {
    SweepCell cell;
    cell.lambda = lambda;
    ExperimentConfig cc = c;
    cc.game.lambda = lambda;
    cc.eval.output_dir = (fs::path(c.eval.output_dir) / ("lambda_" + lambda_label(lambda))).generic_string();
    try {
      validate(cc);
      out << "lambda " << lambda_label(lambda) << "\n";
      cmd_train(cc, root, out);
      const auto ev = cmd_evaluate(cc, root, std::nullopt, false, out);
      cell.ok = true;
      cell.error = ev.report.error_rmse;
      cell.deviation = ev.report.deviation_rmse;
      cell.tv = ev.report.tv;
    } catch (const std::exception& e) {
      cell.failure = e.what();
      err << "lambda " << lambda_label(lambda) << " failed: " << e.what() << "\n";
    }
    r.cells.push_back(std::move(cell));
  }
  auto header = detail::commented(echo_lines(c));
  std::string list;
  for (std::size_t i = 0; i < lambdas.size(); ++i) list += (i ? "," : "") + lambda_label(lambdas[i]);
  header.push_back("sweep.lambdas = " + list);
  for (const auto& cell : r.cells)
    if (!cell.ok) header.push_back("sweep.failure.lambda=" + lambda_label(cell.lambda) + " = " + cell.failure);
  r.summary_path = run_dir(c, root) / c.eval.summary_file;
  write_file_atomic(r.summary_path, format_sweep_summary(r.cells, header));
  out << "summary " << r.summary_path.string() << "\n";
  return r;
}

/// One numeric column with a header row; '#' lines are ignored.
inline std::vector<double> read_series_file(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<double> values;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.find(',') != std::string::npos) {
        throw data::DataError(path.string() + ":" + std::to_string(lineno) + ": expected a single-column series");
      }
      header = true;
      continue;
    }
    try {
      values.push_back(detail::to_double(detail::trim(line)));
    } catch (const std::exception&) {
      throw data::DataError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + line + "'");
    }
  }
  if (values.empty()) throw data::DataError(path.string() + ": series file has no values");
  return values;
}

struct AnalyzeResult {
  std::vector<double> solution;
  double residual = 0.0;
};

inline AnalyzeResult cmd_analyze(std::size_t epsilon, double lambda, game::GameMode mode, const fs::path& input,
                                 const fs::path& output, std::ostream& out = std::cout) {
  const auto y = read_series_file(input);
  AnalyzeResult r;
  r.solution = game::nonparametric_fixed_point(y, epsilon, lambda, mode);
  r.residual = game::stationarity_residual(r.solution, y, epsilon, lambda, mode);
  std::ostringstream os;
  os << "# analyze.epsilon = " << epsilon << "\n";
  os << "# analyze.lambda = " << format_double(lambda) << "\n";
  os << "# analyze.mode = " << game::mode_name(mode) << "\n";
  os << "# analyze.input = " << input.filename().string() << "\n";
  os << "# stationarity_residual = " << format_double(r.residual) << "\n";
  os << "t,input,solution\n";
  for (std::size_t t = 0; t < y.size(); ++t) os << t << "," << format_double(y[t]) << "," << format_double(r.solution[t]) << "\n";
  write_file_atomic(output, os.str());
  out << "stationarity residual " << format_double(r.residual) << "\n";
  return r;
}

}  // namespace coop::cli
