#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coop/cli/commands.hpp"

namespace {

std::vector<double> parse_lambdas(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : coop::cli::detail::split_list(csv)) {
    try {
      out.push_back(coop::cli::detail::to_double(item));
    } catch (const std::exception&) {
      throw coop::cli::ConfigError("bad lambda '" + item + "' in --lambdas");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coop: co-operative explainer games for sequence forecasters"};
  app.require_subcommand(1);

  std::string config_path, model_path, lambdas = "0,0.1,1,10", input, output, mode = "asymmetric";
  std::optional<std::uint64_t> seed;
  bool ar_baseline = false;
  std::size_t epsilon = 1;
  double lambda = 1.0;

  auto* prepare = app.add_subcommand("prepare", "window and cache the dataset");
  auto* train = app.add_subcommand("train", "train the predictor");
  auto* evaluate = app.add_subcommand("evaluate", "Error, Deviation and TV on the evaluation split");
  auto* sweep = app.add_subcommand("sweep", "train and evaluate once per lambda");
  auto* analyze = app.add_subcommand("analyze", "nonparametric fixed point of a 1-channel series");

  for (auto* sub : {prepare, train, evaluate, sweep}) {
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override every seed in the config");
  }
  evaluate->add_option("--model", model_path, "model file (default: from the config)");
  evaluate->add_flag("--ar-baseline", ar_baseline, "evaluate a global ridge AR(K) model instead");
  sweep->add_option("--lambdas", lambdas, "comma-separated lambda values");
  analyze->add_option("--input", input, "series file (header row, one column)")->required();
  analyze->add_option("--output", output, "solution file")->required();
  analyze->add_option("--epsilon", epsilon, "neighborhood radius");
  analyze->add_option("--lambda", lambda, "penalty strength");
  analyze->add_option("--mode", mode, "asymmetric or symmetric");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      coop::cli::cmd_analyze(epsilon, lambda, coop::game::parse_mode(mode), input, output);
      return 0;
    }
    const auto cfg = coop::cli::load_experiment_config(config_path, seed);
    const auto root = coop::cli::output_root();
    if (prepare->parsed()) {
      coop::cli::cmd_prepare(cfg, root);
    } else if (train->parsed()) {
      coop::cli::cmd_train(cfg, root);
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> mp;
      if (!model_path.empty()) mp = model_path;
      coop::cli::cmd_evaluate(cfg, root, mp, ar_baseline);
    } else if (sweep->parsed()) {
      const auto r = coop::cli::cmd_sweep(cfg, parse_lambdas(lambdas), root);
      if (!r.all_ok()) return 1;
    }
  } catch (const coop::game::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
