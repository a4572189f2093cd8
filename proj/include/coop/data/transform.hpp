#pragma once

#include <string>

#include "coop/data/series.hpp"

namespace coop::data {

/// Relative change between consecutive rows: out[t] = (in[t+1] - in[t]) / in[t].
inline RawSeries pct_change(const RawSeries& s) {
  s.validate();
  const std::size_t len = s.length(), n = s.channels();
  RawSeries out{s.name, s.channel_names, Tensor::matrix(len - 1, n)};
  for (std::size_t t = 0; t + 1 < len; ++t)
    for (std::size_t c = 0; c < n; ++c) {
      const double denom = s.values(t, c);
      if (denom == 0.0) {
        const std::string ch = c < s.channel_names.size() ? s.channel_names[c] : std::to_string(c);
        throw DataError("pct_change: zero value in channel '" + ch + "' at index " + std::to_string(t) +
                        " of series '" + s.name + "'");
      }
      out.values(t, c) = (s.values(t + 1, c) - denom) / denom;
    }
  out.values.check_finite("pct_change");
  return out;
}

/// Inverse of pct_change given the first original row (1 x channels).
inline RawSeries cumulative_reconstruct(const RawSeries& changes, const Tensor& first_row) {
  const std::size_t len = changes.length(), n = changes.channels();
  if (first_row.size() != n) throw DataError("cumulative_reconstruct: first row width mismatch");
  RawSeries out{changes.name, changes.channel_names, Tensor::matrix(len + 1, n)};
  for (std::size_t c = 0; c < n; ++c) out.values(0, c) = first_row[c];
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < n; ++c) out.values(t + 1, c) = out.values(t, c) * (1.0 + changes.values(t, c));
  return out;
}

}  // namespace coop::data
