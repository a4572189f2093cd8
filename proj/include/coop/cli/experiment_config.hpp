#pragma once

// `[section]` / `key = value` experiment files. Every key has a default, an
// unknown key or section is an error, and the resolved config can be echoed
// back in the same syntax (one "section.key = value" line per key).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/data/synth.hpp"
#include "coop/data/windowing.hpp"
#include "coop/game/config.hpp"
#include "coop/predictor/config.hpp"
#include "coop/util/files.hpp"

namespace coop::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSection {
  std::string source = "synth";  // synth | csv
  std::string csv_path;
  std::vector<std::string> csv_channels;
  std::string csv_group;  // empty: whole file is one series
  data::SynthKind synth_kind = data::SynthKind::sinusoid_mix;
  std::size_t synth_channels = 1;
  std::size_t synth_length = 2000;
  double synth_noise = 0.3;
  std::vector<double> synth_periods = {5.0, 20.0};
  bool pct_change = false;
  std::size_t input_len = 80;
  std::size_t output_len = 20;
  std::size_t stride = 0;
  data::SplitFractions split = data::kDefaultSplit;
  std::string cache_dir = "cache";
  std::uint64_t seed = 0;
};

struct EvalSection {
  std::string output_dir = "run";
  std::string split = "test";  // val | test
  std::string model_file = "model.json";
  std::string log_file = "train_log.csv";
  std::string report_file = "report.txt";
  std::string table_file = "steps.csv";
  std::string explainer_file = "explainers.csv";
  std::string summary_file = "sweep.csv";
  std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 keeps only the final model
};

struct ExperimentConfig {
  DataSection data;
  predictor::PredictorConfig model;
  game::GameConfig game;
  EvalSection eval;
  std::filesystem::path base_dir;  // directory of the config file, for relative source paths

  void set_seed(std::uint64_t s) {
    data.seed = s;
    model.seed = s;
    game.seed = s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string join_list(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

inline double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

inline std::uint64_t to_u64(const std::string& v) {
  if (v.empty() || v[0] == '-') throw std::invalid_argument("expected a nonnegative integer");
  std::size_t pos = 0;
  const auto u = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return u;
}

inline std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false");
}

inline data::SynthKind to_synth_kind(const std::string& v) {
  if (v == "sinusoid_mix") return data::SynthKind::sinusoid_mix;
  if (v == "piecewise_linear") return data::SynthKind::piecewise_linear;
  if (v == "ar_process") return data::SynthKind::ar_process;
  throw std::invalid_argument("unknown synth kind '" + v + "'");
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Get, class Set>
Binding bind(std::string section, std::string key, Get get, Set set) {
  return Binding{std::move(section), std::move(key), set, get};
}

inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(double v) { return format_double(v); }

inline std::string fmt_doubles(const auto& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item));
  return out;
}

// Canonical key order; also the echo order.
inline const std::vector<Binding>& bindings() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<Binding> table = {
      bind("data", "source", [](const C& c) { return c.data.source; },
           [](C& c, S v) {
             if (v != "synth" && v != "csv") throw std::invalid_argument("expected synth or csv");
             c.data.source = v;
           }),
      bind("data", "csv_path", [](const C& c) { return c.data.csv_path; }, [](C& c, S v) { c.data.csv_path = v; }),
      bind("data", "csv_channels", [](const C& c) { return join_list(c.data.csv_channels); },
           [](C& c, S v) { c.data.csv_channels = split_list(v); }),
      bind("data", "csv_group", [](const C& c) { return c.data.csv_group; }, [](C& c, S v) { c.data.csv_group = v; }),
      bind("data", "synth_kind", [](const C& c) { return std::string(data::synth_kind_name(c.data.synth_kind)); },
           [](C& c, S v) { c.data.synth_kind = to_synth_kind(v); }),
      bind("data", "synth_channels", [](const C& c) { return fmt(c.data.synth_channels); },
           [](C& c, S v) { c.data.synth_channels = to_size(v); }),
      bind("data", "synth_length", [](const C& c) { return fmt(c.data.synth_length); },
           [](C& c, S v) { c.data.synth_length = to_size(v); }),
      bind("data", "synth_noise", [](const C& c) { return fmt(c.data.synth_noise); },
           [](C& c, S v) { c.data.synth_noise = to_double(v); }),
      bind("data", "synth_periods", [](const C& c) { return fmt_doubles(c.data.synth_periods); },
           [](C& c, S v) { c.data.synth_periods = to_doubles(v); }),
      bind("data", "pct_change", [](const C& c) { return std::string(c.data.pct_change ? "true" : "false"); },
           [](C& c, S v) { c.data.pct_change = to_bool(v); }),
      bind("data", "input_len", [](const C& c) { return fmt(c.data.input_len); },
           [](C& c, S v) { c.data.input_len = to_size(v); }),
      bind("data", "output_len", [](const C& c) { return fmt(c.data.output_len); },
           [](C& c, S v) { c.data.output_len = to_size(v); }),
      bind("data", "stride", [](const C& c) { return fmt(c.data.stride); }, [](C& c, S v) { c.data.stride = to_size(v); }),
      bind("data", "split", [](const C& c) { return fmt_doubles(c.data.split); },
           [](C& c, S v) {
             const auto f = to_doubles(v);
             if (f.size() != 3) throw std::invalid_argument("expected three fractions");
             c.data.split = {f[0], f[1], f[2]};
           }),
      bind("data", "cache_dir", [](const C& c) { return c.data.cache_dir; }, [](C& c, S v) { c.data.cache_dir = v; }),
      bind("data", "seed", [](const C& c) { return std::to_string(c.data.seed); },
           [](C& c, S v) { c.data.seed = to_u64(v); }),

      bind("model", "conv_width", [](const C& c) { return fmt(c.model.conv_width); },
           [](C& c, S v) { c.model.conv_width = to_size(v); }),
      bind("model", "conv_filters", [](const C& c) { return fmt(c.model.conv_filters); },
           [](C& c, S v) { c.model.conv_filters = to_size(v); }),
      bind("model", "hidden", [](const C& c) { return fmt(c.model.hidden); }, [](C& c, S v) { c.model.hidden = to_size(v); }),
      bind("model", "dense1", [](const C& c) { return fmt(c.model.dense1); }, [](C& c, S v) { c.model.dense1 = to_size(v); }),
      bind("model", "dense2", [](const C& c) { return fmt(c.model.dense2); }, [](C& c, S v) { c.model.dense2 = to_size(v); }),
      bind("model", "parameterization",
           [](const C& c) { return std::string(predictor::parameterization_name(c.model.parameterization)); },
           [](C& c, S v) { c.model.parameterization = predictor::parse_parameterization(v); }),
      bind("model", "seed", [](const C& c) { return std::to_string(c.model.seed); },
           [](C& c, S v) { c.model.seed = to_u64(v); }),

      bind("game", "lambda", [](const C& c) { return fmt(c.game.lambda); }, [](C& c, S v) { c.game.lambda = to_double(v); }),
      bind("game", "epsilon", [](const C& c) { return fmt(c.game.epsilon); }, [](C& c, S v) { c.game.epsilon = to_size(v); }),
      bind("game", "markov_order", [](const C& c) { return fmt(c.game.markov_order); },
           [](C& c, S v) { c.game.markov_order = to_size(v); }),
      bind("game", "ridge_alpha", [](const C& c) { return fmt(c.game.ridge_alpha); },
           [](C& c, S v) { c.game.ridge_alpha = to_double(v); }),
      bind("game", "mode", [](const C& c) { return std::string(game::mode_name(c.game.mode)); },
           [](C& c, S v) { c.game.mode = game::parse_mode(v); }),
      bind("game", "reg_fraction", [](const C& c) { return fmt(c.game.reg_fraction); },
           [](C& c, S v) { c.game.reg_fraction = to_double(v); }),
      bind("game", "learning_rate", [](const C& c) { return fmt(c.game.optimizer.learning_rate); },
           [](C& c, S v) { c.game.optimizer.learning_rate = to_double(v); }),
      bind("game", "epochs", [](const C& c) { return fmt(c.game.optimizer.epochs); },
           [](C& c, S v) { c.game.optimizer.epochs = to_size(v); }),
      bind("game", "batch_size", [](const C& c) { return fmt(c.game.optimizer.batch_size); },
           [](C& c, S v) { c.game.optimizer.batch_size = to_size(v); }),
      bind("game", "clip_norm", [](const C& c) { return fmt(c.game.optimizer.clip_norm); },
           [](C& c, S v) { c.game.optimizer.clip_norm = to_double(v); }),
      bind("game", "max_steps", [](const C& c) { return fmt(c.game.optimizer.max_steps); },
           [](C& c, S v) { c.game.optimizer.max_steps = to_size(v); }),
      bind("game", "seed", [](const C& c) { return std::to_string(c.game.seed); },
           [](C& c, S v) { c.game.seed = to_u64(v); }),

      bind("eval", "output_dir", [](const C& c) { return c.eval.output_dir; }, [](C& c, S v) { c.eval.output_dir = v; }),
      bind("eval", "split", [](const C& c) { return c.eval.split; },
           [](C& c, S v) {
             if (v != "val" && v != "test") throw std::invalid_argument("expected val or test");
             c.eval.split = v;
           }),
      bind("eval", "model_file", [](const C& c) { return c.eval.model_file; }, [](C& c, S v) { c.eval.model_file = v; }),
      bind("eval", "log_file", [](const C& c) { return c.eval.log_file; }, [](C& c, S v) { c.eval.log_file = v; }),
      bind("eval", "report_file", [](const C& c) { return c.eval.report_file; }, [](C& c, S v) { c.eval.report_file = v; }),
      bind("eval", "table_file", [](const C& c) { return c.eval.table_file; }, [](C& c, S v) { c.eval.table_file = v; }),
      bind("eval", "explainer_file", [](const C& c) { return c.eval.explainer_file; },
           [](C& c, S v) { c.eval.explainer_file = v; }),
      bind("eval", "summary_file", [](const C& c) { return c.eval.summary_file; },
           [](C& c, S v) { c.eval.summary_file = v; }),
      bind("eval", "checkpoint_every", [](const C& c) { return fmt(c.eval.checkpoint_every); },
           [](C& c, S v) { c.eval.checkpoint_every = to_size(v); }),
  };
  return table;
}

inline const Binding* find_binding(const std::string& section, const std::string& key) {
  for (const auto& b : bindings())
    if (b.section == section && b.key == key) return &b;
  return nullptr;
}

}  // namespace detail

/// Cross-field checks; the sub-configs validate their own ranges.
inline void validate(const ExperimentConfig& c) {
  if (c.data.source == "csv" && (c.data.csv_path.empty() || c.data.csv_channels.empty())) {
    throw ConfigError("data.source = csv needs csv_path and csv_channels");
  }
  if (c.data.input_len < 1 || c.data.output_len < 1) throw ConfigError("input_len and output_len must be >= 1");
  if (c.data.input_len + c.data.output_len < c.game.markov_order + 2) {
    throw ConfigError("window of " + std::to_string(c.data.input_len + c.data.output_len) +
                      " rows is too short for markov_order " + std::to_string(c.game.markov_order));
  }
  if (c.model.parameterization != c.game.parameterization) throw ConfigError("model and game parameterization differ");
  try {
    c.game.validate();
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// Applies derived fields: explicit heads use the game's Markov order.
inline void resolve(ExperimentConfig& c) {
  c.game.parameterization = c.model.parameterization;
  c.model.ar_order = c.game.markov_order;
}

inline ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "config") {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "data" && section != "model" && section != "game" && section != "eval") {
        fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' outside of any section");
    const auto* b = detail::find_binding(section, key);
    if (!b) fail("unknown key '" + key + "' in [" + section + "]");
    try {
      b->set(c, value);
    } catch (const std::exception& e) {
      fail("bad value for " + section + "." + key + ": " + e.what());
    }
  }
  resolve(c);
  validate(c);
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                               std::optional<std::uint64_t> seed_override = {}) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig c = parse_experiment_config(text, path.filename().string());
  if (seed_override) c.set_seed(*seed_override);
  c.base_dir = path.parent_path();
  return c;
}

/// "section.key = value" for every key, in canonical order.
inline std::vector<std::string> echo_lines(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& b : detail::bindings()) out.push_back(b.section + "." + b.key + " = " + b.get(c));
  return out;
}

/// The resolved config in its own file syntax; parses back to an equal config.
inline std::string format_experiment_config(const ExperimentConfig& c) {
  std::string out, section;
  for (const auto& b : detail::bindings()) {
    if (b.section != section) {
      out += (section.empty() ? "" : "\n") + ("[" + b.section + "]\n");
      section = b.section;
    }
    out += b.key + " = " + b.get(c) + "\n";
  }
  return out;
}

}  // namespace coop::cli
