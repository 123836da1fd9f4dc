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

#include "tractaug/config_json.hpp"

#include <set>

#include "tractaug/error.hpp"

namespace tractaug {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::Schema, where + ": expected a JSON object");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCode::Schema, where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw std::runtime_error("expected a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) throw std::runtime_error("expected a non-negative integer");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!it->is_number()) throw std::runtime_error("expected a number");
    }
    out = it->get<T>();
  } catch (const std::exception& e) {
    fail(ErrorCode::Schema, where + "." + key + ": " + e.what());
  }
}

}  // namespace

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"voxels_per_sample", c.voxels_per_sample},
          {"foreground_fraction", c.foreground_fraction},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"online_transforms", c.online_transforms},
          {"transforms",
           {{"scale_range", c.transforms.scale_range},
            {"shift_range", c.transforms.shift_range},
            {"noise_max", c.transforms.noise_max},
            {"flip_probability", c.transforms.flip_probability}}}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c, const std::string& where) {
  check_keys(j,
             {"learning_rate", "epochs", "batch_size", "voxels_per_sample", "foreground_fraction", "beta1", "beta2",
              "epsilon", "online_transforms", "transforms"},
             where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "epochs", c.epochs, where);
  read(j, "batch_size", c.batch_size, where);
  read(j, "voxels_per_sample", c.voxels_per_sample, where);
  read(j, "foreground_fraction", c.foreground_fraction, where);
  read(j, "beta1", c.beta1, where);
  read(j, "beta2", c.beta2, where);
  read(j, "epsilon", c.epsilon, where);
  read(j, "online_transforms", c.online_transforms, where);
  if (j.contains("transforms")) {
    const json& t = j["transforms"];
    const std::string w = where + ".transforms";
    check_keys(t, {"scale_range", "shift_range", "noise_max", "flip_probability"}, w);
    read(t, "scale_range", c.transforms.scale_range, w);
    read(t, "shift_range", c.transforms.shift_range, w);
    read(t, "noise_max", c.transforms.noise_max, w);
    read(t, "flip_probability", c.transforms.flip_probability, w);
  }
  return c;
}

json to_json(const PhantomSpec& s) {
  return {{"dims", s.dims},
          {"spacing", s.spacing},
          {"n_existing_tracts", s.n_existing_tracts},
          {"n_novel_tracts", s.n_novel_tracts},
          {"radius_min", s.radius_min},
          {"radius_max", s.radius_max},
          {"control_points", s.control_points},
          {"background", s.background},
          {"bump_min", s.bump_min},
          {"bump_max", s.bump_max},
          {"noise_sigma", s.noise_sigma},
          {"jitter", s.jitter},
          {"novel_overlap_probability", s.novel_overlap_probability}};
}

PhantomSpec phantom_spec_from_json(const json& j, PhantomSpec s, const std::string& where) {
  check_keys(j,
             {"dims", "spacing", "n_existing_tracts", "n_novel_tracts", "radius_min", "radius_max", "control_points",
              "background", "bump_min", "bump_max", "noise_sigma", "jitter", "novel_overlap_probability"},
             where);
  try {
    if (j.contains("dims")) s.dims = j["dims"].get<Dims>();
    if (j.contains("spacing")) s.spacing = j["spacing"].get<std::array<float, 3>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Schema, where + ": dims and spacing must be 3-element arrays (" + e.what() + ")");
  }
  read(j, "n_existing_tracts", s.n_existing_tracts, where);
  read(j, "n_novel_tracts", s.n_novel_tracts, where);
  read(j, "radius_min", s.radius_min, where);
  read(j, "radius_max", s.radius_max, where);
  read(j, "control_points", s.control_points, where);
  read(j, "background", s.background, where);
  read(j, "bump_min", s.bump_min, where);
  read(j, "bump_max", s.bump_max, where);
  read(j, "noise_sigma", s.noise_sigma, where);
  read(j, "jitter", s.jitter, where);
  read(j, "novel_overlap_probability", s.novel_overlap_probability, where);
  return s;
}

ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  check_keys(j, {"data", "model", "stages", "methods", "strategies", "warmup_includes_real", "seeds", "output"},
             "config");
  if (j.contains("data")) {
    const json& d = j["data"];
    require_object(d, "config.data");
    std::string source = "phantom";
    read(d, "source", source, "config.data");
    if (source == "phantom") {
      check_keys(d, {"source", "n_pretrain", "n_test", "phantom"}, "config.data");
      read(d, "n_pretrain", c.n_pretrain, "config.data");
      read(d, "n_test", c.n_test, "config.data");
      if (d.contains("phantom")) c.phantom = phantom_spec_from_json(d["phantom"], c.phantom, "config.data.phantom");
    } else if (source == "manifests") {
      check_keys(d, {"source", "pretrain", "one_shot", "test"}, "config.data");
      for (const char* k : {"pretrain", "one_shot", "test"})
        if (!d.contains(k) || !d[k].is_string()) fail(ErrorCode::Schema, std::string("config.data.") + k + ": expected a path");
      auto resolve = [&](const char* k) {
        std::filesystem::path p = d[k].get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
      };
      c.pretrain_manifest = resolve("pretrain");
      c.one_shot_manifest = resolve("one_shot");
      c.test_manifest = resolve("test");
    } else {
      fail(ErrorCode::Schema, "config.data.source: expected \"phantom\" or \"manifests\", got \"" + source + "\"");
    }
  }
  if (j.contains("model")) {
    check_keys(j["model"], {"hidden"}, "config.model");
    read(j["model"], "hidden", c.hidden, "config.model");
  }
  if (j.contains("stages")) {
    const json& s = j["stages"];
    check_keys(s, {"pretrain", "warmup", "finetune"}, "config.stages");
    if (s.contains("pretrain")) c.stages.pretrain = train_config_from_json(s["pretrain"], c.stages.pretrain, "config.stages.pretrain");
    if (s.contains("warmup")) c.stages.warmup = train_config_from_json(s["warmup"], c.stages.warmup, "config.stages.warmup");
    if (s.contains("finetune"))
      c.stages.finetune = train_config_from_json(s["finetune"], c.stages.finetune, "config.stages.finetune");
  }
  auto string_list = [&](const char* key) {
    const json& a = j[key];
    if (!a.is_array()) fail(ErrorCode::Schema, std::string("config.") + key + ": expected an array of names");
    std::vector<std::string> out;
    for (const auto& e : a) {
      if (!e.is_string()) fail(ErrorCode::Schema, std::string("config.") + key + ": expected an array of names");
      out.push_back(e.get<std::string>());
    }
    return out;
  };
  try {
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : string_list("methods")) c.methods.push_back(parse_method(m));
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : string_list("strategies")) c.strategies.push_back(parse_strategy(s));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    fail(ErrorCode::Schema, std::string("config: ") + e.what());
  }
  read(j, "warmup_includes_real", c.warmup_includes_real, "config");
  if (j.contains("seeds")) {
    check_keys(j["seeds"], {"master"}, "config.seeds");
    read(j["seeds"], "master", c.master_seed, "config.seeds");
  }
  if (j.contains("output")) {
    check_keys(j["output"], {"write_predictions"}, "config.output");
    read(j["output"], "write_predictions", c.write_predictions, "config.output");
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (c.uses_manifests()) {
    j["data"] = {{"source", "manifests"},
                 {"pretrain", c.pretrain_manifest.string()},
                 {"one_shot", c.one_shot_manifest.string()},
                 {"test", c.test_manifest.string()}};
  } else {
    j["data"] = {{"source", "phantom"}, {"n_pretrain", c.n_pretrain}, {"n_test", c.n_test}, {"phantom", to_json(c.phantom)}};
  }
  j["model"] = {{"hidden", c.hidden}};
  j["stages"] = {{"pretrain", to_json(c.stages.pretrain)},
                 {"warmup", to_json(c.stages.warmup)},
                 {"finetune", to_json(c.stages.finetune)}};
  j["methods"] = json::array();
  for (auto m : c.methods) j["methods"].push_back(to_string(m));
  j["strategies"] = json::array();
  for (auto s : c.strategies) j["strategies"].push_back(to_string(s));
  j["warmup_includes_real"] = c.warmup_includes_real;
  j["seeds"] = {{"master", c.master_seed}};
  j["output"] = {{"write_predictions", c.write_predictions}};
  return j;
}

}  // namespace tractaug
