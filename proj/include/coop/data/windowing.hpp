#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "coop/data/series.hpp"
#include "coop/numerics/random.hpp"

namespace coop::data {

using SplitFractions = std::array<double, 3>;

inline constexpr SplitFractions kDefaultSplit = {0.85, 0.05, 0.10};

/// Start offsets of every full window of `window` rows taken every `stride` rows.
inline std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> out;
  if (window == 0 || stride == 0) throw DataError("window and stride must be positive");
  for (std::size_t s = 0; s + window <= length; s += stride) out.push_back(s);
  return out;
}

/// Cuts every series into windows of input_len + output_len rows (stride 0
/// means disjoint windows) and assigns them to train/val/test by a seeded
/// shuffle at the given fractions.
inline TimeSeriesDataset window_split(std::span<const RawSeries> series, std::size_t input_len,
                                      std::size_t output_len, std::size_t stride = 0,
                                      SplitFractions fractions = kDefaultSplit, std::uint64_t seed = 0) {
  if (series.empty()) throw DataError("window_split: no series given");
  if (input_len < 1 || output_len < 1) throw DataError("window_split: input and output lengths must be >= 1");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw DataError("window_split: split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("window_split: split fractions must sum to 1");

  const std::size_t window = input_len + output_len;
  if (stride == 0) stride = window;

  TimeSeriesDataset ds;
  ds.input_len = input_len;
  ds.output_len = output_len;
  ds.channels = series.front().channels();
  ds.channel_names = series.front().channel_names;

  std::vector<Tensor> windows;
  for (const auto& s : series) {
    s.validate();
    if (s.channels() != ds.channels) throw DataError("window_split: series '" + s.name + "' has a different channel count");
    if (s.length() < window) continue;
    for (std::size_t start : window_starts(s.length(), window, stride)) {
      Tensor w = Tensor::matrix(window, ds.channels);
      for (std::size_t r = 0; r < window; ++r)
        for (std::size_t c = 0; c < ds.channels; ++c) w(r, c) = s.values(start + r, c);
      windows.push_back(std::move(w));
    }
  }
  if (windows.empty()) {
    throw DataError("window_split: every series is shorter than one window of " + std::to_string(window) + " rows");
  }

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n = windows.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    const Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
    ds.split(s).push_back(std::move(windows[order[i]]));
  }
  return ds;
}

inline TimeSeriesDataset window_split(const RawSeries& series, std::size_t input_len, std::size_t output_len,
                                      std::size_t stride = 0, SplitFractions fractions = kDefaultSplit,
                                      std::uint64_t seed = 0) {
  return window_split(std::span<const RawSeries>(&series, 1), input_len, output_len, stride, fractions, seed);
}

}  // namespace coop::data
