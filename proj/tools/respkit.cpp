#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "respkit/cli/config.hpp"
#include "respkit/cli/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  int64_t seed_override = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file (key = value)");
  cmd->add_option("--seed", args.seed_override, "override the configured RNG seed")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", args.out_dir, "directory for manifests and artifacts");
}

respkit::cli::RunConfig make_config(const CommonArgs& args) {
  respkit::cli::RunConfig cfg;
  if (!args.config_path.empty()) cfg = respkit::cli::load_config(args.config_path);
  if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"respiratory sound COPD detection pipeline"};
  app.require_subcommand(1);

  CommonArgs index_args, features_args, segment_args, calibrate_args, train_args, cv_args,
      predict_args;
  std::string model_path, wav_path;

  add_common(app.add_subcommand("index", "scan the dataset and write a manifest"),
             index_args);
  add_common(app.add_subcommand("features", "extract and cache feature matrices"),
             features_args);
  add_common(app.add_subcommand("segment", "detect breathing-cycle boundaries"),
             segment_args);
  add_common(app.add_subcommand("calibrate", "fit boundary offsets to the annotations"),
             calibrate_args);
  add_common(app.add_subcommand("train", "train a model and evaluate the held-out split"),
             train_args);
  add_common(app.add_subcommand("cv", "cross-validate on the training split"), cv_args);

  CLI::App* predict = app.add_subcommand("predict", "classify one recording");
  add_common(predict, predict_args);
  predict->add_option("--model", model_path, "trained model file")->required();
  predict->add_option("--wav", wav_path, "recording to classify")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("index")) {
      respkit::cli::cmd_index(make_config(index_args), index_args.out_dir, std::cout);
    } else if (app.got_subcommand("features")) {
      const auto res = respkit::cli::cmd_features(make_config(features_args),
                                                  features_args.out_dir, std::cout);
      if (!res.ok()) return 1;
    } else if (app.got_subcommand("segment")) {
      respkit::cli::cmd_segment(make_config(segment_args), segment_args.out_dir, std::cout);
    } else if (app.got_subcommand("calibrate")) {
      respkit::cli::cmd_calibrate(make_config(calibrate_args), calibrate_args.out_dir,
                                  std::cout);
    } else if (app.got_subcommand("train")) {
      respkit::cli::cmd_train(make_config(train_args), train_args.out_dir, std::cout);
    } else if (app.got_subcommand("cv")) {
      respkit::cli::cmd_cv(make_config(cv_args), cv_args.out_dir, std::cout);
    } else if (app.got_subcommand("predict")) {
      respkit::cli::cmd_predict(model_path, wav_path, std::cout);
    }
  } catch (const respkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
