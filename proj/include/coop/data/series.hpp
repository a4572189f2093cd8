#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/numerics/tensor.hpp"

namespace coop::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A multichannel series: values is length x channels.
struct RawSeries {
  std::string name;
  std::vector<std::string> channel_names;
  Tensor values;

  std::size_t length() const { return values.rows(); }
  std::size_t channels() const { return values.cols(); }

  void validate() const {
    if (values.rank() != 2) throw DataError("series '" + name + "': values must be length x channels");
    if (length() < 2) throw DataError("series '" + name + "': needs at least 2 rows");
    if (channels() < 1) throw DataError("series '" + name + "': needs at least 1 channel");
    if (!channel_names.empty() && channel_names.size() != channels()) {
      throw DataError("series '" + name + "': channel name count mismatch");
    }
    if (!values.all_finite()) throw DataError("series '" + name + "': non-finite value");
  }
};

enum class Split { train, val, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

/// Fixed-length windows, each (input_len + output_len) x channels.
struct TimeSeriesDataset {
  std::size_t input_len = 0;
  std::size_t output_len = 0;
  std::size_t channels = 0;
  std::vector<std::string> channel_names;
  std::array<std::vector<Tensor>, 3> splits;

  std::size_t window_len() const { return input_len + output_len; }

  std::vector<Tensor>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }
  const std::vector<Tensor>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }

  std::size_t total_windows() const { return splits[0].size() + splits[1].size() + splits[2].size(); }

  void validate() const {
    if (input_len < 1 || output_len < 1) throw DataError("dataset: input and output lengths must be >= 1");
    for (const auto& s : splits)
      for (const auto& w : s) {
        if (w.rank() != 2 || w.rows() != window_len() || w.cols() != channels) {
          throw DataError("dataset: window shape " + Tensor::shape_string(w.shape()) + " does not match " +
                          std::to_string(window_len()) + "x" + std::to_string(channels));
        }
      }
  }
};

}  // namespace coop::data
