#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "coop/explainer/explainer.hpp"
#include "coop/util/files.hpp"

namespace coop::explainer {

struct ExplainerRecord {
  std::size_t sequence = 0;
  std::size_t center = 0;
  ARCoefficients coefficients;
  double deviation = 0.0;
};

/// One CSV row per center: sequence, center, theta0_*, theta<k>_<r>_<c>, deviation.
inline void write_explainer_dump(std::ostream& out, const std::vector<ExplainerRecord>& records) {
  if (records.empty()) {
    out << "sequence,center,deviation\n";
    return;
  }
  const std::size_t k = records.front().coefficients.order, n = records.front().coefficients.channels;
  out << "sequence,center";
  for (std::size_t c = 0; c < n; ++c) out << ",theta0_" << c;
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) out << ",theta" << (q + 1) << "_" << r << "_" << c;
  out << ",deviation\n";
  for (const auto& rec : records) {
    const auto& g = rec.coefficients;
    if (g.order != k || g.channels != n) throw ExplainerError("write_explainer_dump: mixed explainer shapes");
    out << rec.sequence << "," << rec.center;
    for (std::size_t c = 0; c < n; ++c) out << "," << format_double(g.include_bias ? g.bias(0, c) : 0.0);
    for (std::size_t q = 0; q < k; ++q)
      for (double v : g.lags[q].values()) out << "," << format_double(v);
    out << "," << format_double(rec.deviation) << "\n";
  }
}

}  // namespace coop::explainer
