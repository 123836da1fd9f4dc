/**
 * Copyright 2026 The tractaug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Talks to the library only through tractaug.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tractaug/tractaug.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kValidation = 4, kTraining = 5 };

int exit_code(ta_status s) {
  switch (s) {
    case TA_OK: return kOk;
    case TA_ERR_IO:
    case TA_ERR_BAD_MAGIC:
    case TA_ERR_UNSUPPORTED_DATATYPE:
    case TA_ERR_NOT_3D:
    case TA_ERR_TRUNCATED: return kIo;
    case TA_ERR_INVALID_ARGUMENT:
    case TA_ERR_GEOMETRY_MISMATCH:
    case TA_ERR_SCHEMA:
    case TA_ERR_AUGMENTATION_EXHAUSTED: return kValidation;
    case TA_ERR_TRAINING: return kTraining;
    default: return kInternal;
  }
}

struct ExitError {
  int code;
  std::string message;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ExitError{kIo, "cannot open " + path};
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ExitError{kValidation, path + ": " + e.what()};
  }
}

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  std::string log_level;
  std::string output_dir;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masking-based data augmentation and one-shot transfer for white-matter tract segmentation"};
  app.name("tractaug");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ta_version()));

  Globals g;
  app.add_option("--seed", g.seed, "Master seed for every random draw")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->default_val(1);
  app.add_option("--log-level", g.log_level, "debug|info|warn|error|off (env TRACTAUG_LOG_LEVEL)");
  app.add_option("--output-dir", g.output_dir, "Directory receiving every output (env TRACTAUG_OUTPUT_DIR)");

  json options = json::object();
  std::string workflow;

  // phantom gen
  auto* phantom = app.add_subcommand("phantom", "Synthetic tract phantoms");
  phantom->require_subcommand(1);
  auto* phantom_gen = phantom->add_subcommand("gen", "Generate pretraining, one-shot and test subjects");
  std::size_t n_pretrain = 10, n_test = 16;
  std::string phantom_config;
  phantom_gen->add_option("--n-pretrain", n_pretrain, "Pretraining subjects")->check(CLI::PositiveNumber);
  phantom_gen->add_option("--n-test", n_test, "Test subjects")->check(CLI::PositiveNumber);
  phantom_gen->add_option("--config", phantom_config, "JSON phantom settings")->check(CLI::ExistingFile);

  // augment
  auto* augment = app.add_subcommand("augment", "Write masking-based synthetic samples of one annotated scan");
  std::string aug_image, aug_labels_dir, aug_manifest, aug_sample;
  std::vector<std::string> aug_strategies;
  std::size_t retry_budget = 64;
  augment->add_option("--image", aug_image, "Input image (.nii or .nii.gz)")->check(CLI::ExistingFile);
  augment->add_option("--labels-dir", aug_labels_dir, "Directory of tract masks, one file per tract")
      ->check(CLI::ExistingDirectory);
  augment->add_option("--manifest", aug_manifest, "Dataset manifest instead of --image/--labels-dir")
      ->check(CLI::ExistingFile);
  augment->add_option("--sample-id", aug_sample, "Manifest entry to augment");
  augment->add_option("--strategy", aug_strategies, "rc1|rc2|tc1|tc2|all (repeatable)")
      ->check(CLI::IsMember({"rc1", "rc2", "tc1", "tc2", "all"}, CLI::ignore_case))
      ->default_val(std::vector<std::string>{"all"});
  augment->add_option("--retry-budget", retry_budget, "Redraws allowed per sample before giving up");

  // train-pretrain
  auto* trainp = app.add_subcommand("train-pretrain", "Train the model on existing-tract annotations");
  std::string tp_manifest, tp_config;
  std::size_t hidden = 0, epochs = 0;
  trainp->add_option("--manifest", tp_manifest, "Manifest of annotated pretraining scans")
      ->required()
      ->check(CLI::ExistingFile);
  trainp->add_option("--hidden", hidden, "Hidden units in the feature layer")->check(CLI::PositiveNumber);
  trainp->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
  trainp->add_option("--config", tp_config, "JSON training settings")->check(CLI::ExistingFile);

  // adapt
  auto* adapt = app.add_subcommand("adapt", "Adapt a pretrained model to novel tracts from one annotated scan");
  std::string ad_method, ad_model, ad_manifest, ad_config;
  std::vector<std::string> ad_strategies;
  std::size_t warmup_epochs = 0, finetune_epochs = 0;
  bool no_real_in_warmup = false;
  adapt->add_option("--method", ad_method, "cft|ift|ours")
      ->required()
      ->check(CLI::IsMember({"cft", "ift", "ours"}, CLI::ignore_case));
  adapt->add_option("--model", ad_model, "Pretrained checkpoint")->required()->check(CLI::ExistingFile);
  adapt->add_option("--manifest", ad_manifest, "Manifest holding the single annotated scan")
      ->required()
      ->check(CLI::ExistingFile);
  adapt->add_option("--strategy", ad_strategies, "Strategies for ours (repeatable)")
      ->check(CLI::IsMember({"rc1", "rc2", "tc1", "tc2", "all"}, CLI::ignore_case));
  adapt->add_option("--warmup-epochs", warmup_epochs, "Warmup epochs")->check(CLI::PositiveNumber);
  adapt->add_option("--finetune-epochs", finetune_epochs, "Fine-tuning epochs")->check(CLI::PositiveNumber);
  adapt->add_flag("--no-real-in-warmup", no_real_in_warmup, "ours: warm up on synthetic scans only");
  adapt->add_option("--config", ad_config, "JSON with \"warmup\" and \"finetune\" training settings")
      ->check(CLI::ExistingFile);

  // predict
  auto* predict = app.add_subcommand("predict", "Segment scans; several models are combined by majority vote");
  std::vector<std::string> pr_models;
  std::string pr_image, pr_manifest;
  predict->add_option("--model", pr_models, "Checkpoint (repeatable)")->required()->check(CLI::ExistingFile);
  auto* pr_img_opt = predict->add_option("--image", pr_image, "Input image")->check(CLI::ExistingFile);
  auto* pr_man_opt = predict->add_option("--manifest", pr_manifest, "Manifest of input images")->check(CLI::ExistingFile);
  pr_img_opt->excludes(pr_man_opt);

  // ensemble
  auto* ensemble = app.add_subcommand("ensemble", "Majority vote over prediction manifests");
  std::vector<std::string> en_preds;
  ensemble->add_option("--predictions", en_preds, "Prediction manifest (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);

  // dice
  auto* dice = app.add_subcommand("dice", "Dice of predictions against annotations");
  std::string di_pred, di_truth;
  bool di_csv = false;
  dice->add_option("--prediction", di_pred, "Prediction manifest")->required()->check(CLI::ExistingFile);
  dice->add_option("--truth", di_truth, "Annotation manifest")->required()->check(CLI::ExistingFile);
  dice->add_flag("--csv", di_csv, "Also write dice.csv");

  // experiment run
  auto* experiment = app.add_subcommand("experiment", "Full transfer experiment");
  experiment->require_subcommand(1);
  auto* exp_run = experiment->add_subcommand("run", "Run pretraining, every adaptation method and evaluation");
  std::string ex_config;
  exp_run->add_option("--config", ex_config, "Experiment config JSON")->check(CLI::ExistingFile);

  // Name the offending word instead of CLI11's generic "subcommand required".
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seed" || a == "--threads" || a == "--log-level" || a == "--output-dir") {
      ++i;
      continue;
    }
    if (a.rfind("-", 0) == 0) continue;
    bool known = false;
    for (const auto* sub : app.get_subcommands([](CLI::App*) { return true; })) known |= sub->get_name() == a;
    if (!known) {
      std::cerr << "tractaug: unknown subcommand '" << a << "'\n\n" << app.help();
      return kUsage;
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "tractaug: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  g.seed_given = app.get_option("--seed")->count() > 0;

  try {
    if (g.log_level.empty())
      if (const char* env = std::getenv("TRACTAUG_LOG_LEVEL")) g.log_level = env;
    if (g.output_dir.empty())
      if (const char* env = std::getenv("TRACTAUG_OUTPUT_DIR")) g.output_dir = env;
    if (g.output_dir.empty()) throw ExitError{kUsage, "--output-dir (or TRACTAUG_OUTPUT_DIR) is required"};
    if (!g.log_level.empty() && ta_set_log_level(g.log_level.c_str()) != TA_OK)
      throw ExitError{kUsage, ta_last_error()};
    if (ta_set_threads(g.threads) != TA_OK) throw ExitError{kUsage, ta_last_error()};

    const std::string out = absolute(g.output_dir);
    options["output_dir"] = out;
    if (g.seed_given || !exp_run->parsed()) options["seed"] = g.seed;

    std::string command;
    if (phantom_gen->parsed()) {
      workflow = "phantom";
      command = "phantom gen";
      options["n_pretrain"] = n_pretrain;
      options["n_test"] = n_test;
      if (!phantom_config.empty()) options["phantom"] = read_json_file(phantom_config);
    } else if (augment->parsed()) {
      workflow = command = "augment";
      if (!aug_manifest.empty()) {
        options["manifest"] = absolute(aug_manifest);
        if (!aug_sample.empty()) options["sample_id"] = aug_sample;
      } else {
        if (aug_image.empty() || aug_labels_dir.empty())
          throw ExitError{kUsage, "augment needs --manifest, or --image together with --labels-dir"};
        options["image"] = absolute(aug_image);
        options["labels_dir"] = absolute(aug_labels_dir);
      }
      options["strategies"] = aug_strategies;
      options["retry_budget"] = retry_budget;
    } else if (trainp->parsed()) {
      workflow = command = "train-pretrain";
      options["manifest"] = absolute(tp_manifest);
      json train = tp_config.empty() ? json::object() : read_json_file(tp_config);
      if (epochs) train["epochs"] = epochs;
      if (!train.empty()) options["train"] = train;
      if (hidden) options["hidden"] = hidden;
    } else if (adapt->parsed()) {
      workflow = command = "adapt";
      options["method"] = ad_method;
      options["model"] = absolute(ad_model);
      options["manifest"] = absolute(ad_manifest);
      if (!ad_strategies.empty()) options["strategies"] = ad_strategies;
      json cfg = ad_config.empty() ? json::object() : read_json_file(ad_config);
      if (!cfg.is_object()) throw ExitError{kValidation, ad_config + ": expected a JSON object"};
      for (const auto& [k, v] : cfg.items())
        if (k != "warmup" && k != "finetune") throw ExitError{kValidation, ad_config + ": unknown key '" + k + "'"};
      json warmup = cfg.value("warmup", json::object()), finetune = cfg.value("finetune", json::object());
      if (warmup_epochs) warmup["epochs"] = warmup_epochs;
      if (finetune_epochs) finetune["epochs"] = finetune_epochs;
      if (!warmup.empty()) options["warmup"] = warmup;
      if (!finetune.empty()) options["finetune"] = finetune;
      options["warmup_includes_real"] = !no_real_in_warmup;
    } else if (predict->parsed()) {
      workflow = command = "predict";
      json models = json::array();
      for (const auto& m : pr_models) models.push_back(absolute(m));
      options["models"] = models;
      if (!pr_manifest.empty()) {
        options["manifest"] = absolute(pr_manifest);
      } else if (!pr_image.empty()) {
        options["image"] = absolute(pr_image);
      } else {
        throw ExitError{kUsage, "predict needs --image or --manifest"};
      }
    } else if (ensemble->parsed()) {
      workflow = command = "ensemble";
      json preds = json::array();
      for (const auto& p : en_preds) preds.push_back(absolute(p));
      options["predictions"] = preds;
    } else if (dice->parsed()) {
      workflow = command = "dice";
      options["prediction"] = absolute(di_pred);
      options["truth"] = absolute(di_truth);
      options["csv"] = di_csv;
    } else if (exp_run->parsed()) {
      workflow = "experiment";
      command = "experiment run";
      if (!ex_config.empty()) {
        options["config"] = read_json_file(ex_config);
        options["config_dir"] = fs::absolute(ex_config).parent_path().string();
      }
    }

    fs::create_directories(out);
    json manifest = {{"tool", "tractaug"},
                     {"version", ta_version()},
                     {"command", command},
                     {"argv", std::vector<std::string>(argv + 1, argv + argc)},
                     {"threads", g.threads},
                     {"log_level", g.log_level.empty() ? "warn" : g.log_level},
                     {"options", options}};
    const auto write_manifest = [&](const json& m) {
      std::ofstream f(fs::path(out) / "run_manifest.json");
      f << m.dump(2) << "\n";
      if (!f) throw ExitError{kIo, "cannot write run_manifest.json in " + out};
    };
    // Written before the run so a failed run still records its config.
    manifest["status"] = "running";
    write_manifest(manifest);
    std::clog << "tractaug " << command << ": resolved options " << options.dump() << "\n";

    char* result = nullptr;
    const ta_status s = ta_run_workflow(workflow.c_str(), options.dump().c_str(), &result);
    if (s != TA_OK) {
      manifest["status"] = std::string("failed: ") + ta_status_name(s);
      manifest["error"] = ta_last_error();
      write_manifest(manifest);
      throw ExitError{exit_code(s), std::string(ta_status_name(s)) + ": " + ta_last_error()};
    }
    const json summary = json::parse(result);
    ta_string_free(result);
    manifest["status"] = "ok";
    manifest["result"] = summary;
    write_manifest(manifest);
    std::cout << summary.dump(2) << "\n";
    return kOk;
  } catch (const ExitError& e) {
    std::cerr << "tractaug: " << e.message << "\n";
    if (e.code == kUsage) std::cerr << "\n" << app.help();
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "tractaug: " << e.what() << "\n";
    return kIo;
  }
}
