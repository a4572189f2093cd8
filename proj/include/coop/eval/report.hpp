#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "coop/data/cache.hpp"
#include "coop/eval/metrics.hpp"
#include "coop/util/files.hpp"

namespace coop::eval {

inline constexpr const char* kReportHeader = "# coop evaluation report v1";

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace detail

/// Key/value report: metrics, per-step arrays, then the echoed config.
inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << kReportHeader << "\n";
  os << "model = " << r.model_descriptor << "\n";
  os << "error_rmse = " << format_double(r.error_rmse) << "\n";
  os << "deviation_rmse = " << format_double(r.deviation_rmse) << "\n";
  os << "tv = " << format_double(r.tv) << "\n";
  os << "horizon = " << r.error_series.size() << "\n";
  os << "tv_flag = " << (r.neighborhood_spans_horizon ? "neighborhood_spans_horizon" : "ok") << "\n";
  os << "error_series = " << detail::join_doubles(r.error_series) << "\n";
  os << "deviation_series = " << detail::join_doubles(r.deviation_series) << "\n";
  os << "tv_series = " << detail::join_doubles(r.tv_series) << "\n";
  for (const auto& line : r.config_echo) os << "config." << line << "\n";
  return os.str();
}

inline EvalReport parse_report(const std::string& text) {
  if (text.rfind(kReportHeader, 0) != 0) throw EvalError("not an evaluation report");
  const auto kv = data::parse_key_values(text);
  auto need = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw EvalError("report is missing '" + k + "'");
    return it->second;
  };
  EvalReport r;
  r.model_descriptor = need("model");
  r.error_rmse = std::stod(need("error_rmse"));
  r.deviation_rmse = std::stod(need("deviation_rmse"));
  r.tv = std::stod(need("tv"));
  r.neighborhood_spans_horizon = need("tv_flag") == "neighborhood_spans_horizon";
  r.error_series = detail::split_doubles(need("error_series"));
  r.deviation_series = detail::split_doubles(need("deviation_series"));
  r.tv_series = detail::split_doubles(need("tv_series"));
  if (r.error_series.size() != std::stoul(need("horizon"))) throw EvalError("report horizon disagrees with its series");
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("config.", 0) == 0) r.config_echo.push_back(line.substr(7));
  }
  return r;
}

/// One row per generated step: step, error, deviation, tv contribution, and
/// the explanation parameters of the first evaluated sequence.
inline std::string format_step_table(const EvalReport& r, const std::vector<std::string>& provenance = {}) {
  std::ostringstream os;
  for (const auto& line : provenance) os << "# " << line << "\n";
  const std::size_t params = r.first_sequence_params.empty() ? 0 : r.first_sequence_params.front().size();
  os << "step,error,deviation,tv";
  for (std::size_t p = 0; p < params; ++p) os << ",param_" << p;
  os << "\n";
  for (std::size_t h = 0; h < r.error_series.size(); ++h) {
    os << h << "," << format_double(r.error_series[h]) << "," << format_double(r.deviation_series[h]) << ","
       << format_double(r.tv_series[h]);
    if (h < r.first_sequence_params.size())
      for (double v : r.first_sequence_params[h]) os << "," << format_double(v);
    os << "\n";
  }
  return os.str();
}

}  // namespace coop::eval
