#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "coop/predictor/config.hpp"

namespace coop::game {

enum class GameMode { asymmetric, symmetric };

inline const char* mode_name(GameMode m) { return m == GameMode::asymmetric ? "asymmetric" : "symmetric"; }

inline GameMode parse_mode(const std::string& s) {
  if (s == "asymmetric") return GameMode::asymmetric;
  if (s == "symmetric") return GameMode::symmetric;
  throw std::invalid_argument("unknown game mode '" + s + "' (expected asymmetric or symmetric)");
}

struct OptimizerConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;     // global gradient norm clip; 0 disables
  std::size_t max_steps = 0;  // 0 = run all epochs
};

struct GameConfig {
  double lambda = 1.0;
  std::size_t epsilon = 9;
  std::size_t markov_order = 2;
  double ridge_alpha = 1.0;
  GameMode mode = GameMode::asymmetric;
  predictor::Parameterization parameterization = predictor::Parameterization::implicit;
  double reg_fraction = 0.1;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    if (epsilon < 1) throw std::invalid_argument("epsilon must be >= 1");
    if (markov_order < 1) throw std::invalid_argument("markov_order must be >= 1");
    if (!(ridge_alpha >= 0.0) || !std::isfinite(ridge_alpha)) throw std::invalid_argument("ridge_alpha must be >= 0");
    if (!(reg_fraction > 0.0 && reg_fraction <= 1.0)) throw std::invalid_argument("reg_fraction must be in (0, 1]");
    if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (optimizer.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(optimizer.clip_norm >= 0.0)) throw std::invalid_argument("clip_norm must be >= 0");
  }
};

}  // namespace coop::game
