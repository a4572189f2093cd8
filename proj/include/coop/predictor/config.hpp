#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coop::predictor {

enum class Parameterization { implicit, explicit_ar };

inline const char* parameterization_name(Parameterization p) {
  return p == Parameterization::implicit ? "implicit" : "explicit";
}

inline Parameterization parse_parameterization(const std::string& s) {
  if (s == "implicit") return Parameterization::implicit;
  if (s == "explicit") return Parameterization::explicit_ar;
  throw std::invalid_argument("unknown parameterization '" + s + "' (expected implicit or explicit)");
}

struct PredictorConfig {
  std::size_t channels = 1;
  std::size_t conv_width = 3;
  std::size_t conv_filters = 16;
  std::size_t hidden = 32;
  std::size_t dense1 = 32;
  std::size_t dense2 = 32;
  Parameterization parameterization = Parameterization::implicit;
  std::size_t ar_order = 1;  // explicit heads only
  std::uint64_t seed = 0;

  bool is_explicit() const { return parameterization == Parameterization::explicit_ar; }

  void validate() const {
    if (channels < 1 || conv_width < 1 || conv_filters < 1 || hidden < 1 || dense1 < 1 || dense2 < 1) {
      throw std::invalid_argument("predictor sizes must all be >= 1");
    }
    if (is_explicit() && ar_order < 1) throw std::invalid_argument("explicit predictor needs ar_order >= 1");
  }

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

}  // namespace coop::predictor
