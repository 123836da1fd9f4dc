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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tractaug/augment.hpp"
#include "tractaug/manifest.hpp"
#include "tractaug/metrics.hpp"
#include "tractaug/model.hpp"
#include "tractaug/phantom.hpp"

namespace tractaug {

enum class AdaptationMethod { CFT, IFT, OURS };

std::string to_string(AdaptationMethod m);
AdaptationMethod parse_method(std::string_view name);

/// Record of one training stage, kept for auditing the protocol.
struct StageRecord {
  std::string name;
  Trainable trainable = Trainable::All;
  // One entry per training volume, in the order they were used.
  std::vector<Provenance> training_data;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::vector<double> loss_curve;
};

struct AdaptedModel {
  std::string label;  // "CFT", "IFT", or the augmentation strategy name
  SegmenterModel model;
  std::vector<StageRecord> stages;
};

struct PretrainResult {
  SegmenterModel model;
  StageRecord stage;
  double training_dice = 0.0;  // mean over tracts and pretraining subjects
};

// Fits input normalization on the pretraining volumes, then trains every
// parameter on the existing-tract labels.
PretrainResult pretrain(std::span<const LabeledVolume> existing, std::size_t hidden, TrainConfig config,
                        std::uint64_t init_seed);

// Feature layer copied from model_e, fresh head, one stage on the real scan.
AdaptedModel adapt_cft(const SegmenterModel& model_e, const LabeledVolume& one_shot, TrainConfig finetune,
                       std::uint64_t head_seed);

// Warmup with frozen features on the real scan, then joint fine-tuning on it.
AdaptedModel adapt_ift(const SegmenterModel& model_e, const LabeledVolume& one_shot, TrainConfig warmup,
                       TrainConfig finetune, std::uint64_t head_seed);

struct OursOptions {
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  std::uint64_t augment_seed = 0;
  std::uint64_t head_seed = 0;
  // Whether the real scan joins the synthetic scans during warmup.
  bool warmup_includes_real = true;
};

// One model per strategy: warmup (frozen features) on that strategy's
// synthetic scans, then joint fine-tuning on the real scan alone. All
// strategies start from the same pretrained model and head seed.
std::vector<AdaptedModel> adapt_ours(const SegmenterModel& model_e, const LabeledVolume& one_shot,
                                     TrainConfig warmup, TrainConfig finetune, const OursOptions& options);

// Majority vote (ties to foreground) over the models' predictions.
TractLabelMap predict_ensemble(std::span<const SegmenterModel> models, const Volume3D& x);

struct StageConfigs {
  TrainConfig pretrain;
  TrainConfig warmup;
  TrainConfig finetune;
  static StageConfigs defaults();
};

struct ExperimentConfig {
  // Phantom data unless all three manifests are given.
  PhantomSpec phantom;
  std::size_t n_pretrain = 10;
  std::size_t n_test = 16;
  std::filesystem::path pretrain_manifest;
  std::filesystem::path one_shot_manifest;
  std::filesystem::path test_manifest;

  std::size_t hidden = 32;
  StageConfigs stages = StageConfigs::defaults();
  std::vector<AdaptationMethod> methods{AdaptationMethod::CFT, AdaptationMethod::IFT, AdaptationMethod::OURS};
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  bool warmup_includes_real = true;
  std::uint64_t master_seed = 0;

  // Empty: nothing is written.
  std::filesystem::path output_dir;
  bool write_predictions = true;

  bool uses_manifests() const { return !pretrain_manifest.empty(); }
  void validate() const;
};

struct MethodComparison {
  std::string a, b;
  TTestResult mean_dice;  // paired over test subjects (mean over tracts)
  std::vector<TTestResult> per_tract;
};

struct ExperimentReport {
  std::uint64_t master_seed = 0;
  std::vector<std::string> method_order;  // e.g. CFT, IFT, OURS, RC1, ...
  std::map<std::string, DiceReport> methods;
  std::vector<MethodComparison> comparisons;
  double pretrain_training_dice = 0.0;
  std::map<std::string, std::vector<StageRecord>> stages;

  std::string to_json() const;
  // Rows per tract in the layout of a per-tract comparison table, followed
  // by the mean of the per-tract averages for every method.
  std::string to_table() const;
};

// Seed streams derived from the master seed.
struct ExperimentSeeds {
  std::uint64_t phantom, splits, init, pretrain, head, warmup, finetune, augment;
  static ExperimentSeeds derive(std::uint64_t master);
};

/// Runs data generation/loading, pretraining, every requested adaptation
/// (and each OURS strategy on its own), evaluation on the test set and the
/// paired t-tests OURS vs CFT and OURS vs IFT. Errors are rethrown with the
/// failing stage prefixed. With an output directory, writes checkpoints,
/// test predictions with manifests, report.json and report.txt.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace tractaug
