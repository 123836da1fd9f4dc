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

#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "tractaug/ensemble.hpp"
#include "tractaug/config_json.hpp"
#include "tractaug/error.hpp"
#include "tractaug/parallel.hpp"
#include "tractaug/pipeline.hpp"

using namespace tractaug;
namespace fs = std::filesystem;

namespace {

PhantomSpec small_spec() {
  PhantomSpec s;
  s.dims = {20, 20, 20};
  s.n_existing_tracts = 3;
  s.n_novel_tracts = 2;
  s.radius_max = 2.0;
  s.seed = 1;
  return s;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 256;
  c.voxels_per_sample = 1024;
  c.foreground_fraction = 0.25;
  c.seed = 3;
  return c;
}

struct Fixture {
  PhantomSplits splits;
  std::vector<LabeledVolume> existing;
  LabeledVolume one_shot;
  SegmenterModel model_e;

  Fixture() {
    Rng rng(2);
    splits = generate_splits(small_spec(), 2, 2, rng);
    for (const auto& p : splits.pretrain) existing.push_back({p.image, p.existing});
    one_shot = {splits.one_shot.image, splits.one_shot.novel};
    model_e = pretrain(existing, 6, quick(2), 9).model;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

bool same_features(const SegmenterModel& a, const SegmenterModel& b) {
  return std::equal(a.feature_params().begin(), a.feature_params().end(), b.feature_params().begin(),
                    b.feature_params().end()) &&
         a.input_shift == b.input_shift && a.input_scale == b.input_scale;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("ours") == AdaptationMethod::OURS);
  CHECK(to_string(AdaptationMethod::IFT) == "IFT");
  CHECK_THROWS_AS(parse_method("xft"), Error);
}

TEST_CASE("pretrain") {
  const Fixture& f = fixture();
  CHECK(f.model_e.tracts() == 3);
  CHECK(f.model_e.tract_names == f.existing.front().labels.names());
  const PretrainResult again = pretrain(f.existing, 6, quick(2), 9);
  CHECK(model_to_json(again.model) == model_to_json(f.model_e));
  CHECK(again.stage.training_data.size() == 2);
  CHECK(again.training_dice >= 0.0);
  CHECK_THROWS_AS(pretrain({}, 6, quick(1), 9), Error);
}

TEST_CASE("CFT") {
  const Fixture& f = fixture();
  const AdaptedModel zero = adapt_cft(f.model_e, f.one_shot, quick(0), 4);
  CHECK(zero.stages.empty());
  CHECK(same_features(zero.model, f.model_e));
  CHECK(zero.model.tracts() == 2);

  const AdaptedModel a = adapt_cft(f.model_e, f.one_shot, quick(2), 4);
  const AdaptedModel b = adapt_cft(f.model_e, f.one_shot, quick(2), 4);
  CHECK(a.model == b.model);
  REQUIRE(a.stages.size() == 1);
  CHECK(a.stages[0].trainable == Trainable::All);
  CHECK(a.stages[0].training_data == std::vector<Provenance>{Provenance::real()});
}

TEST_CASE("IFT: warmup freezes the feature layer") {
  const Fixture& f = fixture();
  const AdaptedModel warm_only = adapt_ift(f.model_e, f.one_shot, quick(3), quick(0), 4);
  REQUIRE(warm_only.stages.size() == 1);
  CHECK(warm_only.stages[0].trainable == Trainable::HeadOnly);
  CHECK(same_features(warm_only.model, f.model_e));
  CHECK(warm_only.model.head_params().size() == f.model_e.with_new_head(f.one_shot.labels.names(), 4).head_params().size());
  const SegmenterModel fresh = f.model_e.with_new_head(f.one_shot.labels.names(), 4);
  CHECK(!std::equal(fresh.head_params().begin(), fresh.head_params().end(), warm_only.model.head_params().begin()));

  const AdaptedModel full = adapt_ift(f.model_e, f.one_shot, quick(2), quick(2), 4);
  REQUIRE(full.stages.size() == 2);
  CHECK(full.stages[1].trainable == Trainable::All);
  for (const auto& s : full.stages) CHECK(s.training_data == std::vector<Provenance>{Provenance::real()});
  CHECK(!same_features(full.model, f.model_e));
}

TEST_CASE("OURS: four models, provenance discipline, freeze") {
  const Fixture& f = fixture();
  OursOptions opt;
  opt.augment_seed = 5;
  opt.head_seed = 4;
  const auto warm_only = adapt_ours(f.model_e, f.one_shot, quick(2), quick(0), opt);
  REQUIRE(warm_only.size() == 4);
  for (const auto& m : warm_only) CHECK(same_features(m.model, f.model_e));

  const auto models = adapt_ours(f.model_e, f.one_shot, quick(1), quick(1), opt);
  REQUIRE(models.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& m = models[k];
    CHECK(m.label == to_string(kAllStrategies[k]));
    REQUIRE(m.stages.size() == 2);
    const auto& warm = m.stages[0].training_data;
    CHECK(warm.size() == 3 + 1);  // 2^2 - 1 synthetic scans plus the real one
    std::size_t synthetic = 0;
    for (const auto& p : warm)
      if (p.kind == Provenance::Kind::Synthetic) {
        ++synthetic;
        CHECK(p.strategy == kAllStrategies[k]);
      }
    CHECK(synthetic == 3);
    CHECK(m.stages[1].training_data == std::vector<Provenance>{Provenance::real()});
  }

  opt.warmup_includes_real = false;
  opt.strategies = {Strategy::TC1};
  const auto no_real = adapt_ours(f.model_e, f.one_shot, quick(1), quick(0), opt);
  REQUIRE(no_real.size() == 1);
  for (const auto& p : no_real[0].stages[0].training_data) CHECK(p.kind == Provenance::Kind::Synthetic);

  opt.strategies.clear();
  CHECK_THROWS_AS(adapt_ours(f.model_e, f.one_shot, quick(1), quick(1), opt), Error);
}

TEST_CASE("OURS: independent of thread count") {
  const Fixture& f = fixture();
  OursOptions opt;
  opt.augment_seed = 5;
  const int before = thread_count();
  set_thread_count(1);
  const auto a = adapt_ours(f.model_e, f.one_shot, quick(1), quick(1), opt);
  set_thread_count(4);
  const auto b = adapt_ours(f.model_e, f.one_shot, quick(1), quick(1), opt);
  set_thread_count(before);
  for (std::size_t k = 0; k < 4; ++k) CHECK(a[k].model == b[k].model);
}

TEST_CASE("predict_ensemble is the vote of member predictions") {
  const Fixture& f = fixture();
  std::vector<SegmenterModel> models;
  for (std::uint64_t s = 1; s <= 4; ++s) models.push_back(f.model_e.with_new_head(f.one_shot.labels.names(), s));
  std::vector<TractLabelMap> preds;
  for (const auto& m : models) preds.push_back(predict(m, f.one_shot.image));
  CHECK(predict_ensemble(models, f.one_shot.image) == majority_vote(preds));
  CHECK_THROWS_AS(predict_ensemble({}, f.one_shot.image), Error);
}

TEST_CASE("seed streams are distinct") {
  const auto s = ExperimentSeeds::derive(0);
  const std::set<std::uint64_t> all{s.phantom, s.splits, s.init, s.pretrain, s.head, s.warmup, s.finetune, s.augment};
  CHECK(all.size() == 8);
  CHECK(ExperimentSeeds::derive(1).phantom != s.phantom);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.pretrain_manifest = "p.json";
  CHECK_THROWS_AS(c.validate(), Error);
  c = ExperimentConfig{};
  c.methods = {AdaptationMethod::OURS};
  c.strategies.clear();
  CHECK_THROWS_AS(c.validate(), Error);
  c = ExperimentConfig{};
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("config JSON round trip and unknown keys") {
  ExperimentConfig c;
  c.hidden = 12;
  c.n_test = 3;
  c.stages.warmup.epochs = 7;
  c.strategies = {Strategy::RC2, Strategy::TC1};
  c.master_seed = 77;
  const auto j = to_json(c);
  const ExperimentConfig back = experiment_config_from_json(j, ".");
  CHECK(to_json(back) == j);
  CHECK(back.stages.warmup.epochs == 7);
  CHECK(back.strategies == c.strategies);

  auto bad = j;
  bad["stages"]["warmup"]["epoch"] = 3;
  try {
    experiment_config_from_json(bad, ".");
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"surprise", 1}}, "."), Error);
  // Every section is optional.
  const ExperimentConfig empty = experiment_config_from_json(nlohmann::json::object(), ".");
  CHECK(to_json(empty) == to_json(ExperimentConfig{}));
}

TEST_CASE("run_experiment: rows, outputs, byte-identical rerun") {
  ExperimentConfig c;
  c.phantom = small_spec();
  c.n_pretrain = 2;
  c.n_test = 2;
  c.hidden = 6;
  c.stages.pretrain = quick(1);
  c.stages.warmup = quick(1);
  c.stages.finetune = quick(1);
  c.master_seed = 11;
  const fs::path out = testutil::temp_dir("experiment");
  c.output_dir = out;
  const ExperimentReport r = run_experiment(c);
  CHECK(r.method_order == std::vector<std::string>{"CFT", "IFT", "OURS", "RC1", "RC2", "TC1", "TC2"});
  for (const auto& m : r.method_order) {
    REQUIRE(r.methods.count(m));
    CHECK(r.methods.at(m).subjects.size() == 2);
    CHECK(r.methods.at(m).tracts.size() == 2);
  }
  REQUIRE(r.comparisons.size() == 2);
  CHECK(r.comparisons[0].a == "OURS");
  for (const char* f : {"report.json", "report.txt", "checkpoints/model_e.json", "checkpoints/model_tc2.json",
                        "predictions/OURS/manifest.json", "data/one_shot.json", "data/test.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  const std::string table = r.to_table();
  CHECK(table.find("OURS") != std::string::npos);

  c.output_dir.clear();
  const int before = thread_count();
  set_thread_count(3);
  const ExperimentReport again = run_experiment(c);
  set_thread_count(before);
  std::ifstream in(out / "report.json");
  const std::string written{std::istreambuf_iterator<char>(in), {}};
  CHECK(again.to_json() == written);
  fs::remove_all(out);
}

TEST_CASE("run_experiment: failures carry the stage name") {
  ExperimentConfig c;
  c.pretrain_manifest = "/nonexistent/p.json";
  c.one_shot_manifest = "/nonexistent/o.json";
  c.test_manifest = "/nonexistent/t.json";
  try {
    run_experiment(c);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("stage 'data'", 0) == 0);
  }
}
