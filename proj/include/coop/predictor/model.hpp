#pragma once

// Sequence predictor: causal convolution over the recent inputs, an LSTM cell,
// two tanh dense layers, and linear heads emitting per-step Gaussian
// parameters. The explicit variant emits AR coefficient heads and forms its
// mean as sum_k theta_k(x_{1:i}) x_{i-k+1} + theta_0(x_{1:i}).

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/numerics/random.hpp"
#include "coop/numerics/tape.hpp"
#include "coop/predictor/config.hpp"

namespace coop::predictor {

class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-step outputs over a sequence; row j belongs to the prefix ending at j.
struct PredictorOutput {
  Tensor mean;    // L x N
  Tensor logvar;  // L x N
  // Explicit parameterization only (empty otherwise).
  Tensor ar_part;  // L x N
  Tensor theta;    // L x (K*N*N)
  Tensor theta0;   // L x N
};

/// A greedy generative rollout: the true prefix followed by generated rows,
/// with the predictor outputs at every prefix of that trajectory.
struct Rollout {
  Tensor trajectory;  // L x N
  PredictorOutput outputs;
};

struct StepVars {
  Var mean;
  Var logvar;
  Var ar_part;
  Var theta;
  Var theta0;
};

class SequenceModel {
 public:
  struct Bound {
    std::vector<Var> params;
  };

  struct State {
    std::deque<Var> history;  // most recent input last
    Var h;
    Var c;
    Var zero_input;
    std::size_t batch = 0;
  };

  explicit SequenceModel(const PredictorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t n = cfg_.channels, f = cfg_.conv_filters, h = cfg_.hidden;
    add("conv.weight", cfg_.conv_width * n, f);
    add("conv.bias", 1, f);
    add("lstm.weight", f + h, 4 * h);
    add("lstm.bias", 1, 4 * h);
    add("dense1.weight", h, cfg_.dense1);
    add("dense1.bias", 1, cfg_.dense1);
    add("dense2.weight", cfg_.dense1, cfg_.dense2);
    add("dense2.bias", 1, cfg_.dense2);
    if (cfg_.is_explicit()) {
      const std::size_t k = cfg_.ar_order;
      add("head.theta.weight", cfg_.dense2, k * n * n);
      add("head.theta.bias", 1, k * n * n);
      add("head.theta0.weight", cfg_.dense2, n);
      add("head.theta0.bias", 1, n);
    } else {
      add("head.mu.weight", cfg_.dense2, n);
      add("head.mu.bias", 1, n);
    }
    add("head.logvar.weight", cfg_.dense2, n);
    add("head.logvar.bias", 1, n);
    initialize();
  }

  const PredictorConfig& config() const { return cfg_; }
  std::size_t channels() const { return cfg_.channels; }
  bool is_explicit() const { return cfg_.is_explicit(); }

  const std::vector<std::string>& parameter_names() const { return names_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }

  std::size_t index_of(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw PredictorError("no parameter named '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
  }
  Tensor& parameter(const std::string& name) { return params_[index_of(name)]; }
  const Tensor& parameter(const std::string& name) const { return params_[index_of(name)]; }

  std::size_t scalar_count() const {
    std::size_t s = 0;
    for (const auto& p : params_) s += p.size();
    return s;
  }

  /// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void initialize() {
    Rng rng(cfg_.seed);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i];
      if (names_[i].ends_with(".bias")) {
        std::fill(p.storage().begin(), p.storage().end(), 0.0);
        continue;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.rows()));
      for (double& v : p.storage()) v = rng.uniform(-bound, bound);
    }
  }

  Bound bind(Tape& tape, bool trainable) const {
    Bound b;
    b.params.reserve(params_.size());
    for (const auto& p : params_) b.params.push_back(trainable ? tape.variable(p) : tape.constant(p));
    return b;
  }

  State initial_state(Tape& tape, std::size_t batch) const {
    State s;
    s.batch = batch;
    s.h = tape.constant(Tensor::matrix(batch, cfg_.hidden));
    s.c = tape.constant(Tensor::matrix(batch, cfg_.hidden));
    s.zero_input = tape.constant(Tensor::matrix(batch, cfg_.channels));
    return s;
  }

  /// Consumes input x (batch x N) and returns the outputs for the prefix ending at x.
  StepVars step(const Bound& b, State& s, const Var& x) const {
    using namespace coop::ops;
    if (x.rows() != s.batch || x.cols() != cfg_.channels) {
      throw PredictorError("step: expected input " + std::to_string(s.batch) + "x" + std::to_string(cfg_.channels) +
                           ", got " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    const std::size_t keep = std::max(cfg_.conv_width, cfg_.is_explicit() ? cfg_.ar_order : std::size_t{1});
    s.history.push_back(x);
    while (s.history.size() > keep) s.history.pop_front();

    const auto recent = [&](std::size_t count) {
      std::vector<Var> parts;
      for (std::size_t q = 0; q < count; ++q)
        parts.push_back(q < s.history.size() ? s.history[s.history.size() - 1 - q] : s.zero_input);
      return parts;
    };
    const auto& p = b.params;
    const std::size_t hd = cfg_.hidden;

    const Var window = cfg_.conv_width == 1 ? x : concat_cols(recent(cfg_.conv_width));
    const Var conv = ops::tanh(add_row(matmul(window, p[0]), p[1]));
    const Var z = add_row(matmul(concat_cols({conv, s.h}), p[2]), p[3]);
    const Var in_gate = sigmoid(slice_cols(z, 0, hd));
    const Var forget_gate = sigmoid(slice_cols(z, hd, hd));
    const Var candidate = ops::tanh(slice_cols(z, 2 * hd, hd));
    const Var out_gate = sigmoid(slice_cols(z, 3 * hd, hd));
    s.c = forget_gate * s.c + in_gate * candidate;
    s.h = out_gate * ops::tanh(s.c);
    const Var d1 = ops::tanh(add_row(matmul(s.h, p[4]), p[5]));
    const Var d2 = ops::tanh(add_row(matmul(d1, p[6]), p[7]));

    StepVars out;
    if (cfg_.is_explicit()) {
      out.theta = add_row(matmul(d2, p[8]), p[9]);
      out.theta0 = add_row(matmul(d2, p[10]), p[11]);
      const Var lags = cfg_.ar_order == 1 ? x : concat_cols(recent(cfg_.ar_order));
      out.ar_part = ar_combine(out.theta, lags, cfg_.ar_order, cfg_.channels);
      out.mean = out.ar_part + out.theta0;
      out.logvar = add_row(matmul(d2, p[12]), p[13]);
    } else {
      out.mean = add_row(matmul(d2, p[8]), p[9]);
      out.logvar = add_row(matmul(d2, p[10]), p[11]);
    }
    return out;
  }

  /// Teacher-forced pass over equally long sequences; element j of the result
  /// holds the batch outputs for prefixes ending at row j.
  std::vector<StepVars> forward(Tape& tape, const Bound& b, const std::vector<const Tensor*>& sequences) const {
    if (sequences.empty()) throw PredictorError("forward: empty batch");
    const std::size_t len = sequences.front()->rows();
    for (const Tensor* s : sequences) check_sequence(*s, len);
    State st = initial_state(tape, sequences.size());
    std::vector<StepVars> out;
    out.reserve(len);
    for (std::size_t j = 0; j < len; ++j) {
      Tensor xj = Tensor::matrix(sequences.size(), cfg_.channels);
      for (std::size_t i = 0; i < sequences.size(); ++i)
        for (std::size_t c = 0; c < cfg_.channels; ++c) xj(i, c) = (*sequences[i])(j, c);
      out.push_back(step(b, st, tape.constant(std::move(xj))));
    }
    return out;
  }

  /// Outputs for every prefix of one sequence (no gradients).
  PredictorOutput forward(const Tensor& sequence) const {
    check_sequence(sequence, sequence.rank() == 2 ? sequence.rows() : 0);
    Tape tape;
    const Bound b = bind(tape, false);
    const auto steps = forward(tape, b, {&sequence});
    PredictorOutput out = allocate_output(steps.size());
    for (std::size_t j = 0; j < steps.size(); ++j) copy_step(steps[j], 0, j, out);
    return out;
  }

  /// Batched greedy generation: rows [0, prefix_len) of each window are
  /// observed, the remaining rows are replaced by fed-back means.
  std::vector<Rollout> rollout(const std::vector<Tensor>& windows, std::size_t prefix_len) const {
    if (windows.empty()) return {};
    const std::size_t len = windows.front().rows(), n = cfg_.channels, bsz = windows.size();
    for (const auto& w : windows) check_sequence(w, len);
    if (prefix_len < 1 || prefix_len > len) throw PredictorError("rollout: prefix length out of range");
    Tape tape;
    const Bound b = bind(tape, false);
    State st = initial_state(tape, bsz);
    std::vector<Rollout> out(bsz);
    for (auto& r : out) {
      r.trajectory = Tensor::matrix(len, n);
      r.outputs = allocate_output(len);
    }
    Tensor prev_mean;
    for (std::size_t j = 0; j < len; ++j) {
      Tensor xj = Tensor::matrix(bsz, n);
      for (std::size_t i = 0; i < bsz; ++i)
        for (std::size_t c = 0; c < n; ++c) {
          xj(i, c) = j < prefix_len ? windows[i](j, c) : prev_mean(i, c);
          out[i].trajectory(j, c) = xj(i, c);
        }
      const StepVars sv = step(b, st, tape.constant(std::move(xj)));
      for (std::size_t i = 0; i < bsz; ++i) copy_step(sv, i, j, out[i].outputs);
      prev_mean = sv.mean.value();
    }
    return out;
  }

  /// Greedy continuation of `prefix` (t x N) for `horizon` steps.
  Tensor generate_greedy(const Tensor& prefix, std::size_t horizon) const {
    if (horizon < 1) throw PredictorError("generate_greedy: horizon must be >= 1");
    check_sequence(prefix, prefix.rank() == 2 ? prefix.rows() : 0);
    const std::size_t t = prefix.rows(), n = cfg_.channels;
    Tensor padded = Tensor::matrix(t + horizon, n);
    std::copy(prefix.storage().begin(), prefix.storage().end(), padded.storage().begin());
    const auto r = rollout({padded}, t);
    Tensor gen = Tensor::matrix(horizon, n);
    for (std::size_t h = 0; h < horizon; ++h)
      for (std::size_t c = 0; c < n; ++c) gen(h, c) = r[0].outputs.mean(t - 1 + h, c);
    return gen;
  }

 private:
  void add(const std::string& name, std::size_t rows, std::size_t cols) {
    names_.push_back(name);
    params_.push_back(Tensor::matrix(rows, cols));
  }

  void check_sequence(const Tensor& s, std::size_t len) const {
    if (s.rank() != 2 || s.rows() == 0) throw PredictorError("forward: empty input sequence");
    if (s.cols() != cfg_.channels) {
      throw PredictorError("forward: input has " + std::to_string(s.cols()) + " channels, model expects " +
                           std::to_string(cfg_.channels));
    }
    if (s.rows() != len) throw PredictorError("forward: sequences in a batch must have equal length");
  }

  PredictorOutput allocate_output(std::size_t len) const {
    const std::size_t n = cfg_.channels;
    PredictorOutput o;
    o.mean = Tensor::matrix(len, n);
    o.logvar = Tensor::matrix(len, n);
    if (cfg_.is_explicit()) {
      o.ar_part = Tensor::matrix(len, n);
      o.theta = Tensor::matrix(len, cfg_.ar_order * n * n);
      o.theta0 = Tensor::matrix(len, n);
    }
    return o;
  }

  void copy_step(const StepVars& sv, std::size_t row, std::size_t j, PredictorOutput& o) const {
    auto put = [&](const Var& v, Tensor& dst) {
      const Tensor& src = v.value();
      for (std::size_t c = 0; c < src.cols(); ++c) dst(j, c) = src(row, c);
    };
    put(sv.mean, o.mean);
    put(sv.logvar, o.logvar);
    if (cfg_.is_explicit()) {
      put(sv.ar_part, o.ar_part);
      put(sv.theta, o.theta);
      put(sv.theta0, o.theta0);
    }
  }

  PredictorConfig cfg_;
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

}  // namespace coop::predictor
