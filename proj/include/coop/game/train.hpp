#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/data/series.hpp"
#include "coop/eval/metrics.hpp"
#include "coop/game/objective.hpp"
#include "coop/numerics/random.hpp"
#include "coop/util/files.hpp"

namespace coop::game {

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what)
      : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double nll = 0.0;      // per training sequence
  double penalty = 0.0;  // lambda-weighted, per training sequence
  double total = 0.0;
  double wall_seconds = 0.0;
  double val_error = 0.0;  // NaN when there is no validation split
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

/// CSV rows (epoch, nll, penalty, total, val_error). Wall time is kept in
/// memory only so that reruns produce identical files.
inline std::string format_train_log(const TrainLog& log, const std::vector<std::string>& provenance = {}) {
  std::ostringstream os;
  for (const auto& line : provenance) os << "# " << line << "\n";
  os << "epoch,nll,penalty,total,val_error\n";
  for (const auto& e : log.epochs) {
    os << e.epoch << "," << format_double(e.nll) << "," << format_double(e.penalty + 0.0) << "," << format_double(e.total)
       << "," << (std::isnan(e.val_error) ? std::string("nan") : format_double(e.val_error)) << "\n";
  }
  return os.str();
}

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.shape(), 0.0);
        v_.emplace_back(p.shape(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].values();
      auto g = grads[i].values();
      auto m = m_[i].values();
      auto v = v_[i].values();
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = b1_ * m[k] + (1.0 - b1_) * g[k];
        v[k] = b2_ * v[k] + (1.0 - b2_) * g[k] * g[k];
        p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
      }
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

struct TrainCallbacks {
  /// After every optimizer step (1-based global step count).
  std::function<void(std::size_t step, const predictor::SequenceModel&)> on_step;
  /// After every epoch.
  std::function<void(const EpochRecord&, const predictor::SequenceModel&)> on_epoch;
};

namespace detail {

inline void clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (auto& g : grads)
    for (double& v : g.storage()) v *= s;
}

inline TrainLog run_training(predictor::SequenceModel& model, const data::TimeSeriesDataset& ds,
                             const GameConfig& cfg, bool with_penalty, const TrainCallbacks& cb) {
  cfg.validate();
  if (ds.channels != model.channels()) {
    throw GameError("dataset has " + std::to_string(ds.channels) + " channels, model expects " +
                    std::to_string(model.channels()));
  }
  const auto& train = ds.split(data::Split::train);
  if (train.empty()) throw GameError("training split is empty");
  const auto& val = ds.split(data::Split::val);

  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng reg_rng(derive_seed(cfg.seed, 2));
  Adam adam(cfg.optimizer.learning_rate);
  const std::size_t bs = std::min(cfg.optimizer.batch_size, train.size());
  const std::size_t n_reg_per_batch = [&] {
    const auto r = static_cast<std::size_t>(std::llround(cfg.reg_fraction * static_cast<double>(bs)));
    return std::clamp<std::size_t>(r, 1, bs);
  }();

  TrainLog log;
  std::size_t global_step = 0;
  bool stop = false;
  for (std::size_t epoch = 1; epoch <= cfg.optimizer.epochs && !stop; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    double nll_sum = 0.0, pen_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(start + bs, order.size());
      std::vector<const Tensor*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);

      std::vector<char> reg(batch.size(), 0);
      if (with_penalty) {
        std::vector<std::size_t> idx(batch.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        reg_rng.shuffle(idx);
        for (std::size_t i = 0; i < std::min(n_reg_per_batch, idx.size()); ++i) reg[idx[i]] = 1;
      }

      Tape tape;
      const auto bound = model.bind(tape, true);
      ObjectiveParts parts;
      std::vector<Tensor> grads;
      try {
        const Var total = game_objective(tape, model, bound, batch, reg, cfg, ds.input_len, with_penalty, nullptr, &parts);
        const Var loss = ops::scale(total, 1.0 / static_cast<double>(batch.size()));
        const Gradients g = tape.backward(loss);
        for (const auto& p : bound.params) grads.push_back(g[p]);
        for (const auto& gr : grads) gr.check_finite("gradient");
      } catch (const NonFiniteError& e) {
        throw TrainingDiverged(epoch, e.what());
      }
      clip_gradients(grads, cfg.optimizer.clip_norm);
      adam.step(model.parameters(), grads);
      for (const auto& p : model.parameters()) {
        if (!p.all_finite()) throw TrainingDiverged(epoch, "non-finite weights after update");
      }
      nll_sum += parts.nll;
      pen_sum += parts.penalty;
      seen += batch.size();
      ++global_step;
      if (cb.on_step) cb.on_step(global_step, model);
      if (cfg.optimizer.max_steps > 0 && global_step >= cfg.optimizer.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.nll = nll_sum / static_cast<double>(seen);
    rec.penalty = pen_sum / static_cast<double>(seen);
    rec.total = rec.nll + rec.penalty;
    if (!std::isfinite(rec.total)) throw TrainingDiverged(epoch, "non-finite objective");
    rec.val_error = val.empty() ? std::nan("") : eval::error_rmse(model, val, ds.input_len);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(rec);
    if (cb.on_epoch) cb.on_epoch(rec, model);
  }
  return log;
}

}  // namespace detail

/// Mini-batch Adam on the configured game objective. In every batch a seeded
/// reg_fraction of the sequences receives the deviation penalty; explainers
/// are refit from the current weights at each batch.
inline TrainLog train(predictor::SequenceModel& model, const data::TimeSeriesDataset& ds, const GameConfig& cfg,
                      const TrainCallbacks& cb = {}) {
  return detail::run_training(model, ds, cfg, true, cb);
}

/// Plain maximum likelihood with the same batching and optimizer.
inline TrainLog train_mle(predictor::SequenceModel& model, const data::TimeSeriesDataset& ds, const GameConfig& cfg,
                          const TrainCallbacks& cb = {}) {
  return detail::run_training(model, ds, cfg, false, cb);
}

}  // namespace coop::game
