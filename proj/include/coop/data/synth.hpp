#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "coop/data/series.hpp"
#include "coop/numerics/random.hpp"

namespace coop::data {

enum class SynthKind { sinusoid_mix, piecewise_linear, ar_process };

inline const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::sinusoid_mix: return "sinusoid_mix";
    case SynthKind::piecewise_linear: return "piecewise_linear";
    case SynthKind::ar_process: return "ar_process";
  }
  return "?";
}

struct SynthSpec {
  SynthKind kind = SynthKind::sinusoid_mix;
  std::size_t channels = 1;
  std::size_t length = 1000;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  // sinusoid_mix: x_c(t) = sum_p sin(2 pi t / p + phase_c)
  std::vector<double> periods = {5.0, 20.0};
  std::vector<double> phases;  // per channel, default 0

  // piecewise_linear: (time, value) knots, linear in between, flat outside.
  std::vector<std::pair<double, double>> knots;

  // ar_process: x_t = sum_k coef[k-1] x_{t-k} + intercept + noise.
  std::vector<Tensor> ar_coefficients;       // K matrices, channels x channels
  std::vector<double> ar_intercept;          // channels, default 0
  std::vector<std::vector<double>> ar_initial;  // K rows, oldest first; default ones
};

/// Largest eigenvalue modulus of the AR companion matrix.
inline double ar_spectral_radius(const std::vector<Tensor>& coefficients) {
  const std::size_t k = coefficients.size();
  if (k == 0) return 0.0;
  const std::size_t n = coefficients.front().rows();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(k * n));
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        comp(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q * n + c)) = coefficients[q](r, c);
  for (std::size_t i = n; i < k * n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - n)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  double rho = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
  return rho;
}

inline void validate(const SynthSpec& s) {
  if (s.channels < 1) throw DataError("synth: channels must be >= 1");
  if (s.length < 2) throw DataError("synth: length must be >= 2");
  if (!(s.noise_std >= 0.0) || !std::isfinite(s.noise_std)) throw DataError("synth: noise must be finite and >= 0");
  switch (s.kind) {
    case SynthKind::sinusoid_mix:
      if (s.periods.empty()) throw DataError("synth: sinusoid_mix needs at least one period");
      for (double p : s.periods)
        if (!(p > 0.0)) throw DataError("synth: periods must be > 0");
      if (!s.phases.empty() && s.phases.size() != s.channels) throw DataError("synth: one phase per channel");
      break;
    case SynthKind::piecewise_linear:
      if (s.knots.size() < 2) throw DataError("synth: piecewise_linear needs at least two knots");
      for (std::size_t i = 1; i < s.knots.size(); ++i)
        if (!(s.knots[i].first > s.knots[i - 1].first)) throw DataError("synth: knot times must increase");
      break;
    case SynthKind::ar_process: {
      if (s.ar_coefficients.empty()) throw DataError("synth: ar_process needs coefficients");
      for (const auto& m : s.ar_coefficients)
        if (m.rank() != 2 || m.rows() != s.channels || m.cols() != s.channels)
          throw DataError("synth: AR coefficient matrices must be channels x channels");
      if (!s.ar_intercept.empty() && s.ar_intercept.size() != s.channels) throw DataError("synth: intercept width mismatch");
      if (!s.ar_initial.empty()) {
        if (s.ar_initial.size() != s.ar_coefficients.size()) throw DataError("synth: need one initial row per lag");
        for (const auto& r : s.ar_initial)
          if (r.size() != s.channels) throw DataError("synth: initial row width mismatch");
      }
      if (s.length < s.ar_coefficients.size()) throw DataError("synth: length shorter than AR order");
      const double rho = ar_spectral_radius(s.ar_coefficients);
      if (!(rho < 1.0)) throw DataError("synth: AR process is not stationary (spectral radius " + std::to_string(rho) + ")");
      break;
    }
  }
}

inline RawSeries synth_generate(const SynthSpec& s) {
  validate(s);
  const std::size_t len = s.length, n = s.channels;
  RawSeries out;
  out.name = synth_kind_name(s.kind);
  for (std::size_t c = 0; c < n; ++c) out.channel_names.push_back("ch" + std::to_string(c));
  out.values = Tensor::matrix(len, n);
  Rng rng(s.seed);
  Tensor& v = out.values;

  switch (s.kind) {
    case SynthKind::sinusoid_mix:
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t c = 0; c < n; ++c) {
          const double phase = s.phases.empty() ? 0.0 : s.phases[c];
          double x = 0.0;
          for (double p : s.periods) x += std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / p + phase);
          v(t, c) = x;
        }
      break;
    case SynthKind::piecewise_linear:
      for (std::size_t t = 0; t < len; ++t) {
        const double tt = static_cast<double>(t);
        double x;
        if (tt <= s.knots.front().first) {
          x = s.knots.front().second;
        } else if (tt >= s.knots.back().first) {
          x = s.knots.back().second;
        } else {
          std::size_t i = 1;
          while (s.knots[i].first < tt) ++i;
          const auto [t0, v0] = s.knots[i - 1];
          const auto [t1, v1] = s.knots[i];
          x = v0 + (v1 - v0) * (tt - t0) / (t1 - t0);
        }
        for (std::size_t c = 0; c < n; ++c) v(t, c) = x;
      }
      break;
    case SynthKind::ar_process: {
      const std::size_t k = s.ar_coefficients.size();
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t c = 0; c < n; ++c) v(t, c) = s.ar_initial.empty() ? 1.0 : s.ar_initial[t][c];
      for (std::size_t t = k; t < len; ++t)
        for (std::size_t r = 0; r < n; ++r) {
          double x = s.ar_intercept.empty() ? 0.0 : s.ar_intercept[r];
          for (std::size_t q = 0; q < k; ++q)
            for (std::size_t c = 0; c < n; ++c) x += s.ar_coefficients[q](r, c) * v(t - 1 - q, c);
          // Innovation noise enters the recursion.
          if (s.noise_std > 0.0) x += s.noise_std * rng.normal();
          v(t, r) = x;
        }
      return out;
    }
  }
  if (s.noise_std > 0.0) {
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t c = 0; c < n; ++c) v(t, c) += s.noise_std * rng.normal();
  }
  return out;
}

}  // namespace coop::data
