#pragma once

// Model files are JSON: a format tag and version, the predictor config, and
// the named weight arrays with their shapes. Doubles are written in shortest
// round-trip form, so save/load is bit-exact.

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "coop/predictor/model.hpp"
#include "coop/util/files.hpp"

namespace coop::predictor {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kModelFormat = "coop-predictor";
inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json config_to_json(const PredictorConfig& c) {
  return {{"channels", c.channels},
          {"conv_width", c.conv_width},
          {"conv_filters", c.conv_filters},
          {"hidden", c.hidden},
          {"dense1", c.dense1},
          {"dense2", c.dense2},
          {"parameterization", parameterization_name(c.parameterization)},
          {"ar_order", c.ar_order},
          {"seed", c.seed}};
}

inline PredictorConfig config_from_json(const nlohmann::json& j) {
  PredictorConfig c;
  c.channels = j.at("channels").get<std::size_t>();
  c.conv_width = j.at("conv_width").get<std::size_t>();
  c.conv_filters = j.at("conv_filters").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.dense1 = j.at("dense1").get<std::size_t>();
  c.dense2 = j.at("dense2").get<std::size_t>();
  c.parameterization = parse_parameterization(j.at("parameterization").get<std::string>());
  c.ar_order = j.at("ar_order").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

/// `provenance` is embedded verbatim under "provenance".
inline std::string serialize_model(const SequenceModel& m, const nlohmann::json& provenance = nullptr) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["config"] = config_to_json(m.config());
  j["parameters"] = nlohmann::json::array();
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const Tensor& p = m.parameters()[i];
    j["parameters"].push_back({{"name", m.parameter_names()[i]}, {"shape", p.shape()}, {"data", p.storage()}});
  }
  if (!provenance.is_null()) j["provenance"] = provenance;
  return j.dump(1) + "\n";
}

inline void save_model(const SequenceModel& m, const std::filesystem::path& path,
                       const nlohmann::json& provenance = nullptr) {
  write_file_atomic(path, serialize_model(m, provenance));
}

inline SequenceModel deserialize_model(const std::string& text, std::optional<std::size_t> expected_channels = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ModelFormatError("not a predictor model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw ModelFormatError("unsupported model file version " + std::to_string(j.at("version").get<int>()));
    }
    const PredictorConfig cfg = config_from_json(j.at("config"));
    if (expected_channels && cfg.channels != *expected_channels) {
      throw ModelFormatError("model has " + std::to_string(cfg.channels) + " channels, data has " +
                             std::to_string(*expected_channels));
    }
    SequenceModel model(cfg);
    const auto& ps = j.at("parameters");
    if (ps.size() != model.parameters().size()) throw ModelFormatError("model file has the wrong number of parameters");
    std::vector<Tensor> loaded;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto name = ps[i].at("name").get<std::string>();
      const auto shape = ps[i].at("shape").get<Tensor::Shape>();
      const Tensor& expect = model.parameters()[i];
      if (name != model.parameter_names()[i]) throw ModelFormatError("unexpected parameter '" + name + "'");
      if (shape != expect.shape()) {
        throw ModelFormatError("shape mismatch for '" + name + "': file " + Tensor::shape_string(shape) + ", config " +
                               Tensor::shape_string(expect.shape()));
      }
      Tensor t(shape, ps[i].at("data").get<std::vector<double>>());
      if (!t.all_finite()) throw ModelFormatError("non-finite weight in '" + name + "'");
      loaded.push_back(std::move(t));
    }
    model.parameters() = std::move(loaded);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model manifest: ") + e.what());
  } catch (const ShapeError& e) {
    throw ModelFormatError(std::string("malformed model manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("malformed model config: ") + e.what());
  }
}

inline SequenceModel load_model(const std::filesystem::path& path, std::optional<std::size_t> expected_channels = {}) {
  if (!std::filesystem::exists(path)) throw ModelFormatError("model file " + path.string() + " does not exist");
  return deserialize_model(read_file(path), expected_channels);
}

}  // namespace coop::predictor
