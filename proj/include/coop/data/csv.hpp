#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coop/data/series.hpp"

namespace coop::data {

namespace detail {

// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_value(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Loads one series per distinct value of `group_column` (or a single series
/// named after the file when no group column is given). Rows with a missing
/// or non-numeric requested value are dropped; groups left with fewer than
/// two rows are skipped with a warning.
inline std::vector<RawSeries> load_csv_series(const std::filesystem::path& path,
                                              const std::vector<std::string>& channel_names,
                                              const std::optional<std::string>& group_column = std::nullopt,
                                              std::ostream& warnings = std::cerr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  if (channel_names.empty()) throw DataError("no channels requested");

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file " + path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("CSV file " + path.string() + " has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cols;
  for (const auto& c : channel_names) cols.push_back(column_of(c));
  const std::optional<std::size_t> group_col =
      group_column ? std::optional<std::size_t>(column_of(*group_column)) : std::nullopt;

  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> rows;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    std::vector<double> vals;
    bool ok = true;
    for (std::size_t c : cols) {
      const auto v = c < fields.size() ? detail::parse_value(fields[c]) : std::nullopt;
      if (!v) {
        ok = false;
        break;
      }
      vals.push_back(*v);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    std::string key = path.stem().string();
    if (group_col) key = *group_col < fields.size() ? detail::trim(fields[*group_col]) : std::string();
    auto [it, inserted] = rows.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.insert(it->second.end(), vals.begin(), vals.end());
  }
  if (dropped > 0) warnings << "warning: dropped " << dropped << " rows with missing values from " << path.string() << "\n";

  std::vector<RawSeries> out;
  const std::size_t n = channel_names.size();
  for (const auto& key : order) {
    auto& v = rows[key];
    const std::size_t len = v.size() / n;
    if (len < 2) {
      warnings << "warning: group '" << key << "' has " << len << " usable rows; skipped\n";
      continue;
    }
    out.push_back(RawSeries{key, channel_names, Tensor({len, n}, std::move(v))});
  }
  return out;
}

}  // namespace coop::data
