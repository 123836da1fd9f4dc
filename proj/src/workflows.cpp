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

#include "tractaug/workflows.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "tractaug/config_json.hpp"
#include "tractaug/ensemble.hpp"
#include "tractaug/error.hpp"
#include "tractaug/log.hpp"
#include "tractaug/nifti_io.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, std::set<std::string> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::Schema, where + ": options must be a JSON object");
  allowed.insert("output_dir");
  allowed.insert("seed");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCode::Schema, where + ": unknown option '" + k + "'");
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty())
    fail(ErrorCode::InvalidArgument, where + ": option '" + key + "' is required");
  return it->get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (it->is_string()) return {it->get<std::string>()};
  if (!it->is_array()) fail(ErrorCode::Schema, where + ": option '" + key + "' must be a string or list of strings");
  std::vector<std::string> out;
  for (const auto& e : *it) {
    if (!e.is_string()) fail(ErrorCode::Schema, where + ": option '" + key + "' must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::uint64_t get_seed(const json& j) {
  auto it = j.find("seed");
  if (it == j.end()) return 0;
  if (!it->is_number_unsigned()) fail(ErrorCode::Schema, "option 'seed' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

fs::path output_dir(const json& j, const std::string& where) {
  fs::path dir = get_string(j, "output_dir", where);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) {
    if (lower(n) == "all") {
      out.assign(kAllStrategies.begin(), kAllStrategies.end());
      continue;
    }
    out.push_back(parse_strategy(n));
  }
  if (out.empty()) out.assign(kAllStrategies.begin(), kAllStrategies.end());
  // Duplicates would produce identical models.
  std::vector<Strategy> unique;
  for (Strategy s : out)
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
  return unique;
}

// Writes image + labels under dir and returns the manifest entry.
ManifestEntry write_pair(const std::string& id, const Volume3D* image, const TractLabelMap& labels, const fs::path& dir,
                         fs::path image_path = {}) {
  ManifestEntry e;
  e.sample_id = id;
  fs::create_directories(dir / "labels");
  if (image) {
    image_path = dir / "image.nii.gz";
    nifti::write_volume(*image, image_path);
  }
  e.image = image_path;
  for (std::size_t j = 0; j < labels.channel_count(); ++j) {
    const fs::path p = dir / "labels" / (labels.name(j) + ".nii.gz");
    nifti::write_mask(labels.channel(j), p);
    e.labels.push_back({labels.name(j), p});
  }
  return e;
}

// Label maps written as masks only (predictions), manifest image pointing at the input.
ManifestEntry write_prediction(const std::string& id, const fs::path& image_path, const TractLabelMap& labels,
                               const fs::path& dir) {
  ManifestEntry e;
  e.sample_id = id;
  e.image = image_path;
  fs::create_directories(dir);
  for (std::size_t j = 0; j < labels.channel_count(); ++j) {
    const fs::path p = dir / (labels.name(j) + ".nii.gz");
    nifti::write_mask(labels.channel(j), p);
    e.labels.push_back({labels.name(j), p});
  }
  return e;
}

json stage_json(const StageRecord& s) {
  std::size_t synthetic = 0;
  for (const auto& p : s.training_data) synthetic += p.kind == Provenance::Kind::Synthetic;
  return {{"name", s.name},
          {"trainable", s.trainable == Trainable::All ? "all" : "head_only"},
          {"epochs", s.epochs_run},
          {"best_epoch", s.best_epoch},
          {"real_scans", s.training_data.size() - synthetic},
          {"synthetic_scans", synthetic},
          {"loss_curve", s.loss_curve}};
}

std::string sample_stem(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".nii.gz", ".nii"})
    if (name.size() > std::strlen(ext) && name.ends_with(ext)) return name.substr(0, name.size() - std::strlen(ext));
  return p.stem().string();
}

// ---------------------------------------------------------------------------

json phantom_workflow(const json& o) {
  check_keys(o, {"n_pretrain", "n_test", "phantom"}, "phantom");
  const fs::path out = output_dir(o, "phantom");
  const ExperimentSeeds seeds = ExperimentSeeds::derive(get_seed(o));
  PhantomSpec spec = o.contains("phantom") ? phantom_spec_from_json(o["phantom"], {}, "phantom") : PhantomSpec{};
  spec.seed = seeds.phantom;
  const std::size_t n_pretrain = o.value("n_pretrain", std::size_t{10});
  const std::size_t n_test = o.value("n_test", std::size_t{16});
  if (n_pretrain < 1 || n_test < 1) fail(ErrorCode::InvalidArgument, "phantom: n_pretrain and n_test must be >= 1");
  Rng rng(seeds.splits);
  const PhantomSplits splits = generate_splits(spec, n_pretrain, n_test, rng);

  DatasetManifest pre, one, test;
  pre.tracts = existing_tract_names(spec.n_existing_tracts);
  one.tracts = test.tracts = novel_tract_names(spec.n_novel_tracts);
  for (const auto& s : splits.pretrain)
    pre.entries.push_back(write_pair(s.subject_id, &s.image, s.existing, out / "pretrain" / s.subject_id));
  one.entries.push_back(
      write_pair(splits.one_shot.subject_id, &splits.one_shot.image, splits.one_shot.novel, out / "one_shot" / splits.one_shot.subject_id));
  for (const auto& s : splits.test) test.entries.push_back(write_pair(s.subject_id, &s.image, s.novel, out / "test" / s.subject_id));
  write_manifest(pre, out / "pretrain.json");
  write_manifest(one, out / "one_shot.json");
  write_manifest(test, out / "test.json");
  return {{"manifests",
           {{"pretrain", (out / "pretrain.json").string()},
            {"one_shot", (out / "one_shot.json").string()},
            {"test", (out / "test.json").string()}}},
          {"existing_tracts", pre.tracts},
          {"novel_tracts", one.tracts},
          {"subjects", n_pretrain + 1 + n_test}};
}

json augment_workflow(const json& o) {
  check_keys(o, {"image", "labels_dir", "manifest", "sample_id", "strategies", "retry_budget"}, "augment");
  const fs::path out = output_dir(o, "augment");
  const std::uint64_t seed = get_seed(o);
  Volume3D image;
  TractLabelMap labels;
  std::string id;
  if (o.contains("manifest")) {
    if (o.contains("image") || o.contains("labels_dir"))
      fail(ErrorCode::InvalidArgument, "augment: give either a manifest or an image with a labels directory");
    const DatasetManifest m = read_manifest(get_string(o, "manifest", "augment"));
    const ManifestEntry* entry = nullptr;
    if (o.contains("sample_id")) {
      const std::string want = get_string(o, "sample_id", "augment");
      for (const auto& e : m.entries)
        if (e.sample_id == want) entry = &e;
      if (!entry) fail(ErrorCode::InvalidArgument, "augment: sample '" + want + "' is not in the manifest");
    } else {
      if (m.entries.size() != 1)
        fail(ErrorCode::InvalidArgument, "augment: manifest holds " + std::to_string(m.entries.size()) +
                                             " samples; choose one with a sample id");
      entry = &m.entries[0];
    }
    image = load_image(*entry);
    labels = load_labels(*entry);
    id = entry->sample_id;
  } else {
    const fs::path image_path = get_string(o, "image", "augment");
    const fs::path labels_dir = get_string(o, "labels_dir", "augment");
    image = nifti::read_volume(image_path);
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& f : fs::directory_iterator(labels_dir, ec)) {
      const std::string n = f.path().filename().string();
      if (f.is_regular_file() && (n.ends_with(".nii") || n.ends_with(".nii.gz"))) files.push_back(f.path());
    }
    if (ec) fail(ErrorCode::Io, "augment: cannot list " + labels_dir.string() + ": " + ec.message());
    if (files.empty()) fail(ErrorCode::InvalidArgument, "augment: no .nii or .nii.gz files in " + labels_dir.string());
    std::sort(files.begin(), files.end());
    std::vector<std::string> names;
    std::vector<BinaryMask3D> channels;
    for (const auto& f : files) {
      names.push_back(sample_stem(f));
      channels.push_back(nifti::read_mask(f));
    }
    labels = TractLabelMap(std::move(names), std::move(channels));
    id = sample_stem(image_path);
  }
  require_same_geometry(image.geometry(), labels.geometry(), "augment input");

  const std::vector<Strategy> strategies = parse_strategies(get_strings(o, "strategies", "augment"));
  const std::size_t budget = o.value("retry_budget", std::size_t{64});
  json result = json::object();
  for (Strategy s : strategies) {
    const std::string sname = lower(to_string(s));
    const auto plan = AugmentationPlan::for_tracts(s, labels.channel_count(), seed);
    const std::vector<SyntheticSample> samples = generate_dataset(image, labels, plan, budget);
    DatasetManifest m;
    m.tracts = labels.names();
    json cutouts = json::array();
    for (const auto& smp : samples) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s-%03zu", sname.c_str(), smp.index);
      ManifestEntry e = write_pair(buf, &smp.image, smp.labels, out / sname / buf);
      e.provenance = Provenance::synthetic(s, smp.seed, smp.index);
      m.entries.push_back(std::move(e));
      json c = {{"sample_id", buf}, {"source", id}};
      if (const auto* box = std::get_if<BoxRegion>(&smp.provenance)) {
        c["box"] = {{"origin", box->origin}, {"extent", box->extent}, {"lambda", box->lambda}};
      } else {
        const auto& sub = std::get<TractSubset>(smp.provenance);
        std::vector<std::string> chosen;
        for (std::size_t j = 0; j < sub.bits.size(); ++j)
          if (sub.bits[j]) chosen.push_back(labels.name(j));
        c["tracts"] = chosen;
      }
      cutouts.push_back(c);
    }
    write_manifest(m, out / sname / "manifest.json");
    write_text(out / sname / "cutouts.json", cutouts.dump(2) + "\n");
    result[sname] = {{"samples", samples.size()}, {"manifest", (out / sname / "manifest.json").string()}};
    log::info("augment: ", to_string(s), " produced ", samples.size(), " samples");
  }
  return {{"source", id}, {"tracts", labels.names()}, {"strategies", result}};
}

std::vector<LabeledVolume> load_all(const DatasetManifest& m) {
  std::vector<LabeledVolume> out(m.entries.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {load_image(m.entries[i]), load_labels(m.entries[i])};
  return out;
}

json train_pretrain_workflow(const json& o) {
  check_keys(o, {"manifest", "hidden", "train"}, "train-pretrain");
  const fs::path out = output_dir(o, "train-pretrain");
  const ExperimentSeeds seeds = ExperimentSeeds::derive(get_seed(o));
  const DatasetManifest m = read_manifest(get_string(o, "manifest", "train-pretrain"));
  if (m.entries.empty()) fail(ErrorCode::InvalidArgument, "train-pretrain: the manifest has no samples");
  TrainConfig cfg = StageConfigs::defaults().pretrain;
  if (o.contains("train")) cfg = train_config_from_json(o["train"], cfg, "train-pretrain.train");
  cfg.seed = seeds.pretrain;
  const std::size_t hidden = o.value("hidden", ExperimentConfig{}.hidden);
  const std::vector<LabeledVolume> data = load_all(m);
  const PretrainResult r = pretrain(data, hidden, cfg, seeds.init);
  save_model(r.model, out / "model_e.json");
  json record = {{"stage", stage_json(r.stage)}, {"training_dice", r.training_dice}, {"config", to_json(cfg)}};
  write_text(out / "pretrain_record.json", record.dump(2) + "\n");
  return {{"model", (out / "model_e.json").string()}, {"training_dice", r.training_dice}, {"epochs", cfg.epochs}};
}

json adapt_workflow(const json& o) {
  check_keys(o, {"method", "model", "manifest", "strategies", "warmup", "finetune", "warmup_includes_real"}, "adapt");
  const fs::path out = output_dir(o, "adapt");
  const ExperimentSeeds seeds = ExperimentSeeds::derive(get_seed(o));
  const AdaptationMethod method = parse_method(get_string(o, "method", "adapt"));
  const SegmenterModel model_e = load_model(get_string(o, "model", "adapt"));
  const DatasetManifest m = read_manifest(get_string(o, "manifest", "adapt"));
  if (m.entries.size() != 1)
    fail(ErrorCode::InvalidArgument,
         "adapt: the one-shot manifest must hold exactly one sample, found " + std::to_string(m.entries.size()));
  const LabeledVolume one{load_image(m.entries[0]), load_labels(m.entries[0])};
  StageConfigs stages = StageConfigs::defaults();
  if (o.contains("warmup")) stages.warmup = train_config_from_json(o["warmup"], stages.warmup, "adapt.warmup");
  if (o.contains("finetune")) stages.finetune = train_config_from_json(o["finetune"], stages.finetune, "adapt.finetune");
  stages.warmup.seed = seeds.warmup;
  stages.finetune.seed = seeds.finetune;

  std::vector<AdaptedModel> models;
  if (method == AdaptationMethod::CFT) {
    models.push_back(adapt_cft(model_e, one, stages.finetune, seeds.head));
  } else if (method == AdaptationMethod::IFT) {
    models.push_back(adapt_ift(model_e, one, stages.warmup, stages.finetune, seeds.head));
  } else {
    OursOptions opts;
    opts.strategies = parse_strategies(get_strings(o, "strategies", "adapt"));
    opts.augment_seed = seeds.augment;
    opts.head_seed = seeds.head;
    opts.warmup_includes_real = o.value("warmup_includes_real", true);
    models = adapt_ours(model_e, one, stages.warmup, stages.finetune, opts);
  }
  json result = {{"method", to_string(method)}, {"models", json::array()}};
  json record = json::object();
  for (const auto& am : models) {
    const fs::path p = out / ("model_" + lower(am.label) + ".json");
    save_model(am.model, p);
    result["models"].push_back(p.string());
    json stages_json = json::array();
    for (const auto& s : am.stages) stages_json.push_back(stage_json(s));
    record[am.label] = stages_json;
  }
  write_text(out / "adapt_record.json", record.dump(2) + "\n");
  return result;
}

json predict_workflow(const json& o) {
  check_keys(o, {"models", "image", "manifest"}, "predict");
  const fs::path out = output_dir(o, "predict");
  std::vector<SegmenterModel> models;
  for (const auto& p : get_strings(o, "models", "predict")) models.push_back(load_model(p));
  if (models.empty()) fail(ErrorCode::InvalidArgument, "predict: at least one model is required");
  for (const auto& m : models)
    if (m.tract_names != models.front().tract_names)
      fail(ErrorCode::InvalidArgument, "predict: ensembled models must segment the same tracts in the same order");

  std::vector<std::pair<std::string, fs::path>> inputs;
  if (o.contains("manifest") == o.contains("image"))
    fail(ErrorCode::InvalidArgument, "predict: give exactly one of an image or a manifest");
  if (o.contains("manifest")) {
    for (const auto& e : read_manifest(get_string(o, "manifest", "predict")).entries) inputs.emplace_back(e.sample_id, e.image);
  } else {
    const fs::path image = get_string(o, "image", "predict");
    inputs.emplace_back(sample_stem(image), image);
  }
  DatasetManifest pm;
  pm.tracts = models.front().tract_names;
  for (const auto& [id, path] : inputs) {
    const Volume3D x = nifti::read_volume(path);
    const TractLabelMap y = predict_ensemble(models, x);
    pm.entries.push_back(write_prediction(id, fs::absolute(path), y, out / id));
  }
  write_manifest(pm, out / "predictions.json");
  return {{"manifest", (out / "predictions.json").string()}, {"samples", inputs.size()}, {"models", models.size()}};
}

json ensemble_workflow(const json& o) {
  check_keys(o, {"predictions"}, "ensemble");
  const fs::path out = output_dir(o, "ensemble");
  std::vector<DatasetManifest> ms;
  for (const auto& p : get_strings(o, "predictions", "ensemble")) ms.push_back(read_manifest(p));
  if (ms.empty()) fail(ErrorCode::InvalidArgument, "ensemble: at least one prediction manifest is required");
  DatasetManifest em;
  em.tracts = ms.front().tracts;
  for (const auto& entry : ms.front().entries) {
    std::vector<TractLabelMap> votes;
    for (const auto& m : ms) {
      auto it = std::find_if(m.entries.begin(), m.entries.end(),
                             [&](const ManifestEntry& e) { return e.sample_id == entry.sample_id; });
      if (it == m.entries.end())
        fail(ErrorCode::InvalidArgument, "ensemble: sample '" + entry.sample_id + "' is missing from a manifest");
      votes.push_back(load_labels(*it));
    }
    for (const auto& m : ms)
      if (m.entries.size() != ms.front().entries.size())
        fail(ErrorCode::InvalidArgument, "ensemble: the prediction manifests list different samples");
    em.entries.push_back(write_prediction(entry.sample_id, entry.image, majority_vote(votes), out / entry.sample_id));
  }
  write_manifest(em, out / "ensemble.json");
  return {{"manifest", (out / "ensemble.json").string()}, {"samples", em.entries.size()}, {"voters", ms.size()}};
}

json dice_workflow(const json& o) {
  check_keys(o, {"prediction", "truth", "csv"}, "dice");
  const fs::path out = output_dir(o, "dice");
  const DatasetManifest pred = read_manifest(get_string(o, "prediction", "dice"));
  const DatasetManifest truth = read_manifest(get_string(o, "truth", "dice"));
  std::vector<DiceCell> cells;
  for (const auto& t : truth.entries) {
    auto it = std::find_if(pred.entries.begin(), pred.entries.end(),
                           [&](const ManifestEntry& e) { return e.sample_id == t.sample_id; });
    if (it == pred.entries.end()) fail(ErrorCode::InvalidArgument, "dice: no prediction for sample '" + t.sample_id + "'");
    const TractLabelMap y = load_labels(t);
    const auto d = dice_per_tract(load_labels(*it), y);
    for (std::size_t j = 0; j < d.size(); ++j) cells.push_back({y.name(j), t.sample_id, d[j]});
  }
  if (cells.empty()) fail(ErrorCode::InvalidArgument, "dice: the truth manifest has no samples");
  const DiceReport r = aggregate(cells);
  json per_tract = json::object(), cells_json = json::object();
  for (std::size_t t = 0; t < r.tracts.size(); ++t) {
    per_tract[r.tracts[t]] = r.per_tract_mean[t];
    json row = json::object();
    for (std::size_t s = 0; s < r.subjects.size(); ++s) row[r.subjects[s]] = r.per_tract_per_subject[t][s];
    cells_json[r.tracts[t]] = row;
  }
  const json report = {{"grand_mean", r.grand_mean}, {"per_tract_mean", per_tract}, {"per_tract_per_subject", cells_json}};
  write_text(out / "dice.json", report.dump(2) + "\n");
  std::string table = "tract mean_dice\n";
  char buf[64];
  for (std::size_t t = 0; t < r.tracts.size(); ++t) {
    std::snprintf(buf, sizeof buf, " %.4f\n", r.per_tract_mean[t]);
    table += r.tracts[t] + buf;
  }
  std::snprintf(buf, sizeof buf, "mean %.4f\n", r.grand_mean);
  table += buf;
  write_text(out / "dice.txt", table);
  if (o.value("csv", false)) {
    std::string csv = "tract,subject,dice\n";
    for (std::size_t t = 0; t < r.tracts.size(); ++t)
      for (std::size_t s = 0; s < r.subjects.size(); ++s) {
        std::snprintf(buf, sizeof buf, ",%.17g\n", r.per_tract_per_subject[t][s]);
        csv += r.tracts[t] + "," + r.subjects[s] + buf;
      }
    write_text(out / "dice.csv", csv);
  }
  return {{"grand_mean", r.grand_mean}, {"per_tract_mean", per_tract}, {"table", table}};
}

json experiment_workflow(const json& o) {
  check_keys(o, {"config", "config_dir"}, "experiment");
  const fs::path out = output_dir(o, "experiment");
  const json cfg_json = o.value("config", json::object());
  ExperimentConfig cfg = experiment_config_from_json(cfg_json, o.value("config_dir", std::string(".")));
  if (o.contains("seed")) cfg.master_seed = get_seed(o);
  cfg.output_dir = out;
  write_text(out / "resolved_config.json", to_json(cfg).dump(2) + "\n");
  const ExperimentReport r = run_experiment(cfg);
  json means = json::object();
  for (const auto& m : r.method_order) means[m] = r.methods.at(m).grand_mean;
  json tests = json::object();
  for (const auto& c : r.comparisons) tests[c.a + "_vs_" + c.b] = {{"t", c.mean_dice.t}, {"p", c.mean_dice.p}};
  return {{"report", (out / "report.json").string()},
          {"table", (out / "report.txt").string()},
          {"grand_mean", means},
          {"t_tests", tests},
          {"pretrain_training_dice", r.pretrain_training_dice}};
}

}  // namespace

json run_workflow(const std::string& name, const json& options) {
  if (name == "phantom") return phantom_workflow(options);
  if (name == "augment") return augment_workflow(options);
  if (name == "train-pretrain") return train_pretrain_workflow(options);
  if (name == "adapt") return adapt_workflow(options);
  if (name == "predict") return predict_workflow(options);
  if (name == "ensemble") return ensemble_workflow(options);
  if (name == "dice") return dice_workflow(options);
  if (name == "experiment") return experiment_workflow(options);
  fail(ErrorCode::InvalidArgument, "unknown workflow '" + name + "'");
}

}  // namespace tractaug
