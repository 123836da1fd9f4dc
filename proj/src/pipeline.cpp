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

#include "tractaug/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tractaug/ensemble.hpp"
#include "tractaug/error.hpp"
#include "tractaug/log.hpp"
#include "tractaug/nifti_io.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

using nlohmann::json;

std::string to_string(AdaptationMethod m) {
  switch (m) {
    case AdaptationMethod::CFT: return "CFT";
    case AdaptationMethod::IFT: return "IFT";
    case AdaptationMethod::OURS: return "OURS";
  }
  return "?";
}

AdaptationMethod parse_method(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "CFT") return AdaptationMethod::CFT;
  if (up == "IFT") return AdaptationMethod::IFT;
  if (up == "OURS") return AdaptationMethod::OURS;
  fail(ErrorCode::InvalidArgument, "unknown adaptation method '" + std::string(name) + "' (cft|ift|ours)");
}

namespace {

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "stage '" + stage + "': " + e.what());
  }
}

StageRecord record_stage(std::string name, const TrainConfig& cfg, std::vector<Provenance> data,
                         const TrainResult& r) {
  StageRecord s;
  s.name = std::move(name);
  s.trainable = cfg.trainable;
  s.training_data = std::move(data);
  s.epochs_run = cfg.epochs;
  s.best_epoch = r.best_epoch;
  s.loss_curve = r.loss_curve;
  return s;
}

double mean_training_dice(const SegmenterModel& model, std::span<const LabeledVolume> samples) {
  std::vector<double> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto d = dice_per_tract(predict(model, samples[i].image), samples[i].labels);
    double s = 0.0;
    for (double v : d) s += v;
    per[i] = s / static_cast<double>(d.size());
  });
  double total = 0.0;
  for (double v : per) total += v;
  return total / static_cast<double>(per.size());
}

}  // namespace

PretrainResult pretrain(std::span<const LabeledVolume> existing, std::size_t hidden, TrainConfig config,
                        std::uint64_t init_seed) {
  if (existing.empty()) fail(ErrorCode::InvalidArgument, "pretraining needs at least one annotated scan");
  PretrainResult out;
  SegmenterModel model = SegmenterModel::create(hidden, existing.front().labels.names(), init_seed);

  // Normalization statistics from a fixed voxel draw of every scan.
  Rng rng(mix_seed(init_seed, 0x6e6f726d));  // "norm"
  FeatureArray pooled;
  for (const auto& s : existing) {
    std::vector<std::size_t> voxels(std::min<std::size_t>(8192, s.image.size()));
    for (auto& v : voxels) v = rng.below(s.image.size());
    const FeatureArray f = extract_features_at(s.image, voxels);
    pooled.values.insert(pooled.values.end(), f.values.begin(), f.values.end());
    pooled.voxels += f.voxels;
  }
  fit_normalization(model, pooled);

  config.trainable = Trainable::All;
  const TrainResult r = train(model, existing, config);
  out.model = r.model;
  out.stage = record_stage("pretrain", config, std::vector<Provenance>(existing.size(), Provenance::real()), r);
  out.training_dice = mean_training_dice(out.model, existing);
  return out;
}

AdaptedModel adapt_cft(const SegmenterModel& model_e, const LabeledVolume& one_shot, TrainConfig finetune,
                       std::uint64_t head_seed) {
  AdaptedModel out;
  out.label = "CFT";
  out.model = model_e.with_new_head(one_shot.labels.names(), head_seed);
  finetune.trainable = Trainable::All;
  if (finetune.epochs > 0) {
    const TrainResult r = train(out.model, std::span(&one_shot, 1), finetune, &one_shot);
    out.model = r.model;
    out.stages.push_back(record_stage("finetune", finetune, {Provenance::real()}, r));
  }
  return out;
}

AdaptedModel adapt_ift(const SegmenterModel& model_e, const LabeledVolume& one_shot, TrainConfig warmup,
                       TrainConfig finetune, std::uint64_t head_seed) {
  AdaptedModel out;
  out.label = "IFT";
  out.model = model_e.with_new_head(one_shot.labels.names(), head_seed);
  warmup.trainable = Trainable::HeadOnly;
  finetune.trainable = Trainable::All;
  if (warmup.epochs > 0) {
    const TrainResult r = train(out.model, std::span(&one_shot, 1), warmup, &one_shot);
    out.model = r.model;
    out.stages.push_back(record_stage("warmup", warmup, {Provenance::real()}, r));
  }
  if (finetune.epochs > 0) {
    const TrainResult r = train(out.model, std::span(&one_shot, 1), finetune, &one_shot);
    out.model = r.model;
    out.stages.push_back(record_stage("finetune", finetune, {Provenance::real()}, r));
  }
  return out;
}

std::vector<AdaptedModel> adapt_ours(const SegmenterModel& model_e, const LabeledVolume& one_shot,
                                     TrainConfig warmup, TrainConfig finetune, const OursOptions& options) {
  if (options.strategies.empty()) fail(ErrorCode::InvalidArgument, "OURS needs at least one augmentation strategy");
  warmup.trainable = Trainable::HeadOnly;
  finetune.trainable = Trainable::All;
  std::vector<AdaptedModel> out(options.strategies.size());
  // Strategies are independent; each runs its own stages in one task.
  parallel_for(options.strategies.size(), [&](std::size_t k) {
    const Strategy s = options.strategies[k];
    in_stage("OURS/" + to_string(s), [&] {
      AdaptedModel& m = out[k];
      m.label = to_string(s);
      m.model = model_e.with_new_head(one_shot.labels.names(), options.head_seed);
      const auto plan = AugmentationPlan::for_tracts(s, one_shot.labels.channel_count(), options.augment_seed);
      std::vector<SyntheticSample> synthetic = generate_dataset(one_shot.image, one_shot.labels, plan);
      std::vector<LabeledVolume> warm;
      std::vector<Provenance> prov;
      warm.reserve(synthetic.size() + 1);
      for (auto& smp : synthetic) {
        prov.push_back(Provenance::synthetic(s, smp.seed, smp.index));
        warm.push_back({std::move(smp.image), std::move(smp.labels)});
      }
      synthetic.clear();
      if (options.warmup_includes_real) {
        warm.push_back(one_shot);
        prov.push_back(Provenance::real());
      }
      if (warmup.epochs > 0) {
        const TrainResult r = train(m.model, warm, warmup, &one_shot);
        m.model = r.model;
        m.stages.push_back(record_stage("warmup", warmup, std::move(prov), r));
      }
      if (finetune.epochs > 0) {
        const TrainResult r = train(m.model, std::span(&one_shot, 1), finetune, &one_shot);
        m.model = r.model;
        m.stages.push_back(record_stage("finetune", finetune, {Provenance::real()}, r));
      }
      return 0;
    });
  });
  return out;
}

TractLabelMap predict_ensemble(std::span<const SegmenterModel> models, const Volume3D& x) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "ensemble needs at least one model");
  std::vector<TractLabelMap> preds;
  preds.reserve(models.size());
  for (const auto& m : models) preds.push_back(predict(m, x));
  return majority_vote(preds);
}

StageConfigs StageConfigs::defaults() {
  StageConfigs s;
  for (TrainConfig* c : {&s.pretrain, &s.warmup, &s.finetune}) {
    c->batch_size = 256;
    c->foreground_fraction = 0.25;
  }
  s.pretrain.epochs = 40;
  s.pretrain.voxels_per_sample = 16384;
  s.pretrain.trainable = Trainable::All;
  // Warmup sees every synthetic scan each epoch, so fewer voxels per scan.
  s.warmup.epochs = 25;
  s.warmup.voxels_per_sample = 4096;
  s.warmup.trainable = Trainable::HeadOnly;
  s.finetune.epochs = 25;
  s.finetune.voxels_per_sample = 32768;
  s.finetune.trainable = Trainable::All;
  return s;
}

void ExperimentConfig::validate() const {
  const bool any = !pretrain_manifest.empty() || !one_shot_manifest.empty() || !test_manifest.empty();
  const bool all = !pretrain_manifest.empty() && !one_shot_manifest.empty() && !test_manifest.empty();
  if (any && !all)
    fail(ErrorCode::InvalidArgument, "real-data experiments need pretrain, one_shot and test manifests together");
  if (!all) {
    phantom.validate();
    if (n_pretrain < 1 || n_test < 1) fail(ErrorCode::InvalidArgument, "n_pretrain and n_test must be >= 1");
  }
  if (hidden < 1) fail(ErrorCode::InvalidArgument, "hidden must be >= 1");
  stages.pretrain.validate();
  if (stages.warmup.epochs > 0) stages.warmup.validate();
  if (stages.finetune.epochs > 0) stages.finetune.validate();
  if (methods.empty()) fail(ErrorCode::InvalidArgument, "no adaptation methods requested");
  if (std::find(methods.begin(), methods.end(), AdaptationMethod::OURS) != methods.end() && strategies.empty())
    fail(ErrorCode::InvalidArgument, "OURS requires at least one augmentation strategy");
}

ExperimentSeeds ExperimentSeeds::derive(std::uint64_t master) {
  return {mix_seed(master, 1), mix_seed(master, 2), mix_seed(master, 3), mix_seed(master, 4),
          mix_seed(master, 5), mix_seed(master, 6), mix_seed(master, 7), mix_seed(master, 8)};
}

// ---------------------------------------------------------------------------

namespace {

json ttest_json(const TTestResult& t) {
  json j;
  j["t"] = std::isfinite(t.t) ? json(t.t) : json(t.t > 0 ? "inf" : "-inf");
  j["p"] = t.p;
  j["dof"] = t.dof;
  return j;
}

const char* trainable_name(Trainable t) { return t == Trainable::All ? "all" : "head_only"; }

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_p(double p) {
  char buf[32];
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

}  // namespace

std::string ExperimentReport::to_json() const {
  json doc;
  doc["format_version"] = 1;
  doc["master_seed"] = master_seed;
  doc["method_order"] = method_order;
  doc["pretrain_training_dice"] = pretrain_training_dice;
  json methods_json = json::object();
  for (const auto& [name, r] : methods) {
    json m;
    m["grand_mean"] = r.grand_mean;
    json per_tract = json::object();
    for (std::size_t t = 0; t < r.tracts.size(); ++t) per_tract[r.tracts[t]] = r.per_tract_mean[t];
    m["per_tract_mean"] = per_tract;
    json cells = json::object();
    for (std::size_t t = 0; t < r.tracts.size(); ++t) {
      json row = json::object();
      for (std::size_t s = 0; s < r.subjects.size(); ++s) row[r.subjects[s]] = r.per_tract_per_subject[t][s];
      cells[r.tracts[t]] = row;
    }
    m["per_tract_per_subject"] = cells;
    methods_json[name] = m;
  }
  doc["methods"] = methods_json;
  json comps = json::object();
  for (const auto& c : comparisons) {
    json j;
    j["mean_dice"] = ttest_json(c.mean_dice);
    json per = json::object();
    const auto& tracts = methods.at(c.a).tracts;
    for (std::size_t t = 0; t < c.per_tract.size(); ++t) per[tracts[t]] = ttest_json(c.per_tract[t]);
    j["per_tract"] = per;
    comps[c.a + "_vs_" + c.b] = j;
  }
  doc["t_tests"] = comps;
  json stage_json = json::object();
  for (const auto& [label, list] : stages) {
    json arr = json::array();
    for (const auto& s : list) {
      json j;
      j["name"] = s.name;
      j["trainable"] = trainable_name(s.trainable);
      j["epochs"] = s.epochs_run;
      j["best_epoch"] = s.best_epoch;
      std::size_t synthetic = 0;
      for (const auto& p : s.training_data) synthetic += p.kind == Provenance::Kind::Synthetic;
      j["real_scans"] = s.training_data.size() - synthetic;
      j["synthetic_scans"] = synthetic;
      j["final_loss"] = s.loss_curve.empty() ? 0.0 : s.loss_curve.back();
      arr.push_back(j);
    }
    stage_json[label] = arr;
  }
  doc["stages"] = stage_json;
  return doc.dump(2) + "\n";
}

std::string ExperimentReport::to_table() const {
  std::ostringstream os;
  if (methods.empty()) return {};
  const auto& tracts = methods.begin()->second.tracts;
  auto find_cmp = [&](const std::string& b) -> const MethodComparison* {
    for (const auto& c : comparisons)
      if (c.b == b) return &c;
    return nullptr;
  };
  os << "Average Dice per novel tract (p: paired t-test against OURS; * p<0.05, ** p<0.01, *** p<0.001)\n";
  os << "Tract         ";
  for (const auto& m : method_order) {
    os << (m.size() < 8 ? m + std::string(8 - m.size(), ' ') : m);
    if (find_cmp(m)) os << "p       ";
  }
  os << "\n";
  for (std::size_t t = 0; t < tracts.size(); ++t) {
    std::string name = tracts[t];
    name.resize(std::max<std::size_t>(name.size(), 14), ' ');
    os << name;
    for (const auto& m : method_order) {
      os << fmt3(methods.at(m).per_tract_mean[t]) << "   ";
      if (const auto* c = find_cmp(m)) {
        std::string p = fmt_p(c->per_tract[t].p);
        p.resize(std::max<std::size_t>(p.size(), 8), ' ');
        os << p;
      }
    }
    os << "\n";
  }
  os << "\nMean of the average Dice coefficients\n";
  for (const auto& m : method_order) {
    std::string name = m;
    name.resize(std::max<std::size_t>(name.size(), 8), ' ');
    os << name << fmt3(methods.at(m).grand_mean) << "\n";
  }
  os << "\nPretrained model, mean training Dice on existing tracts: " << fmt3(pretrain_training_dice) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

struct Subject {
  std::string id;
  LabeledVolume data;
  std::filesystem::path image_path;  // set when the image lives on disk
};

LabeledVolume load_entry(const ManifestEntry& e) { return {load_image(e), load_labels(e)}; }

void write_subject(const Subject& s, const std::filesystem::path& dir, ManifestEntry& entry) {
  std::filesystem::create_directories(dir / "labels");
  entry.sample_id = s.id;
  entry.image = dir / "image.nii.gz";
  nifti::write_volume(s.data.image, entry.image);
  for (std::size_t j = 0; j < s.data.labels.channel_count(); ++j) {
    const auto p = dir / "labels" / (s.data.labels.name(j) + ".nii.gz");
    nifti::write_mask(s.data.labels.channel(j), p);
    entry.labels.push_back({s.data.labels.name(j), p});
  }
  entry.provenance = Provenance::real();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ExperimentSeeds seeds = ExperimentSeeds::derive(config.master_seed);
  const bool write = !config.output_dir.empty();
  if (write) std::filesystem::create_directories(config.output_dir);

  std::vector<LabeledVolume> pretrain_set;
  Subject one_shot;
  std::vector<Subject> test;

  in_stage("data", [&] {
    if (config.uses_manifests()) {
      const auto pm = read_manifest(config.pretrain_manifest);
      const auto om = read_manifest(config.one_shot_manifest);
      const auto tm = read_manifest(config.test_manifest);
      if (pm.entries.empty() || tm.entries.empty()) fail(ErrorCode::InvalidArgument, "empty pretrain or test manifest");
      if (om.entries.size() != 1) fail(ErrorCode::InvalidArgument, "one-shot manifest must hold exactly one scan");
      for (const auto& e : pm.entries) pretrain_set.push_back(load_entry(e));
      one_shot = {om.entries[0].sample_id, load_entry(om.entries[0]), om.entries[0].image};
      for (const auto& e : tm.entries) test.push_back({e.sample_id, load_entry(e), e.image});
    } else {
      PhantomSpec spec = config.phantom;
      spec.seed = seeds.phantom;
      Rng rng(seeds.splits);
      PhantomSplits splits = generate_splits(spec, config.n_pretrain, config.n_test, rng);
      for (auto& s : splits.pretrain) pretrain_set.push_back({std::move(s.image), std::move(s.existing)});
      one_shot = {splits.one_shot.subject_id, {std::move(splits.one_shot.image), std::move(splits.one_shot.novel)}, {}};
      for (auto& s : splits.test) test.push_back({s.subject_id, {std::move(s.image), std::move(s.novel)}, {}});
      if (write) {
        const auto data = config.output_dir / "data";
        DatasetManifest om, tm;
        om.tracts = tm.tracts = one_shot.data.labels.names();
        om.entries.emplace_back();
        write_subject(one_shot, data / one_shot.id, om.entries.back());
        one_shot.image_path = om.entries.back().image;
        for (auto& s : test) {
          tm.entries.emplace_back();
          write_subject(s, data / s.id, tm.entries.back());
          s.image_path = tm.entries.back().image;
        }
        write_manifest(om, data / "one_shot.json");
        write_manifest(tm, data / "test.json");
      }
    }
    return 0;
  });
  log::info("data: ", pretrain_set.size(), " pretraining scans, 1 one-shot scan, ", test.size(), " test scans");

  ExperimentReport report;
  report.master_seed = config.master_seed;

  TrainConfig pre_cfg = config.stages.pretrain;
  pre_cfg.seed = seeds.pretrain;
  const PretrainResult pre = in_stage("pretrain", [&] { return pretrain(pretrain_set, config.hidden, pre_cfg, seeds.init); });
  report.pretrain_training_dice = pre.training_dice;
  report.stages["pretrain"] = {pre.stage};
  log::info("pretrain: mean training Dice ", pre.training_dice);
  pretrain_set.clear();

  TrainConfig warm_cfg = config.stages.warmup;
  warm_cfg.seed = seeds.warmup;
  TrainConfig fine_cfg = config.stages.finetune;
  fine_cfg.seed = seeds.finetune;

  // label -> models whose vote forms that method's prediction
  std::vector<std::pair<std::string, std::vector<SegmenterModel>>> predictors;
  std::vector<std::pair<std::string, SegmenterModel>> checkpoints{{"model_e", pre.model}};
  for (AdaptationMethod method : config.methods) {
    const std::string name = to_string(method);
    in_stage(name, [&] {
      if (method == AdaptationMethod::CFT) {
        AdaptedModel m = adapt_cft(pre.model, one_shot.data, fine_cfg, seeds.head);
        report.stages[name] = m.stages;
        checkpoints.emplace_back("model_cft", m.model);
        predictors.push_back({name, {std::move(m.model)}});
      } else if (method == AdaptationMethod::IFT) {
        AdaptedModel m = adapt_ift(pre.model, one_shot.data, warm_cfg, fine_cfg, seeds.head);
        report.stages[name] = m.stages;
        checkpoints.emplace_back("model_ift", m.model);
        predictors.push_back({name, {std::move(m.model)}});
      } else {
        OursOptions opts;
        opts.strategies = config.strategies;
        opts.augment_seed = seeds.augment;
        opts.head_seed = seeds.head;
        opts.warmup_includes_real = config.warmup_includes_real;
        std::vector<AdaptedModel> models = adapt_ours(pre.model, one_shot.data, warm_cfg, fine_cfg, opts);
        std::vector<SegmenterModel> voters;
        for (auto& m : models) voters.push_back(m.model);
        predictors.push_back({name, voters});
        for (auto& m : models) {
          report.stages[m.label] = m.stages;
          std::string lower = m.label;
          std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
          checkpoints.emplace_back("model_" + lower, m.model);
          predictors.push_back({m.label, {std::move(m.model)}});
        }
      }
      log::info(name, ": adaptation done");
      return 0;
    });
  }

  // Evaluation: every predictor on every test subject.
  std::vector<std::vector<TractLabelMap>> predictions(predictors.size(), std::vector<TractLabelMap>(test.size()));
  in_stage("evaluate", [&] {
    parallel_for(test.size(), [&](std::size_t s) {
      const FeatureArray feats = extract_features(test[s].data.image);
      const Geometry& g = test[s].data.image.geometry();
      // Single models first; an ensemble reuses the votes of models already
      // evaluated on their own.
      for (std::size_t p = 0; p < predictors.size(); ++p)
        if (predictors[p].second.size() == 1) predictions[p][s] = predict(predictors[p].second[0], feats, g);
      for (std::size_t p = 0; p < predictors.size(); ++p) {
        if (predictors[p].second.size() == 1) continue;
        std::vector<TractLabelMap> votes;
        for (const auto& model : predictors[p].second) {
          std::size_t q = 0;
          while (q < predictors.size() && !(predictors[q].second.size() == 1 && predictors[q].second[0] == model)) ++q;
          votes.push_back(q < predictors.size() ? predictions[q][s] : predict(model, feats, g));
        }
        predictions[p][s] = majority_vote(votes);
      }
    });
    for (std::size_t p = 0; p < predictors.size(); ++p) {
      std::vector<DiceCell> cells;
      for (std::size_t s = 0; s < test.size(); ++s) {
        const auto d = dice_per_tract(predictions[p][s], test[s].data.labels);
        for (std::size_t t = 0; t < d.size(); ++t) cells.push_back({test[s].data.labels.name(t), test[s].id, d[t]});
      }
      report.method_order.push_back(predictors[p].first);
      report.methods[predictors[p].first] = aggregate(cells);
    }
    return 0;
  });

  // Paired t-tests of OURS against the fine-tuning baselines.
  if (report.methods.count("OURS")) {
    for (const char* other : {"CFT", "IFT"}) {
      if (!report.methods.count(other)) continue;
      const DiceReport& a = report.methods.at("OURS");
      const DiceReport& b = report.methods.at(other);
      MethodComparison c;
      c.a = "OURS";
      c.b = other;
      if (a.subjects.size() >= 2) {
        c.mean_dice = paired_t_test(a.per_subject_mean(), b.per_subject_mean());
        for (std::size_t t = 0; t < a.tracts.size(); ++t)
          c.per_tract.push_back(paired_t_test(a.per_tract_per_subject[t], b.per_tract_per_subject[t]));
      }
      report.comparisons.push_back(std::move(c));
    }
  }

  if (write) {
    in_stage("write", [&] {
      const auto ckpt = config.output_dir / "checkpoints";
      std::filesystem::create_directories(ckpt);
      for (const auto& [name, model] : checkpoints) save_model(model, ckpt / (name + ".json"));
      if (config.write_predictions) {
        for (std::size_t p = 0; p < predictors.size(); ++p) {
          const auto dir = config.output_dir / "predictions" / predictors[p].first;
          DatasetManifest pm;
          pm.tracts = one_shot.data.labels.names();
          for (std::size_t s = 0; s < test.size(); ++s) {
            std::filesystem::create_directories(dir / test[s].id);
            ManifestEntry e;
            e.sample_id = test[s].id;
            e.image = test[s].image_path;
            for (std::size_t j = 0; j < predictions[p][s].channel_count(); ++j) {
              const auto path = dir / test[s].id / (predictions[p][s].name(j) + ".nii.gz");
              nifti::write_mask(predictions[p][s].channel(j), path);
              e.labels.push_back({predictions[p][s].name(j), path});
            }
            pm.entries.push_back(std::move(e));
          }
          write_manifest(pm, dir / "manifest.json");
        }
      }
      std::ofstream(config.output_dir / "report.json") << report.to_json();
      std::ofstream(config.output_dir / "report.txt") << report.to_table();
      return 0;
    });
  }
  return report;
}

}  // namespace tractaug
