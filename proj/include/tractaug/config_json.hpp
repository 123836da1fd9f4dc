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

#include "json.hpp"
#include "tractaug/phantom.hpp"
#include "tractaug/pipeline.hpp"

namespace tractaug {

// JSON forms of the configuration structs. Readers start from the given
// defaults, accept a subset of keys, and reject unknown keys with
// ErrorCode::Schema naming the offending path.

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults, const std::string& where);

nlohmann::json to_json(const PhantomSpec& s);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j, PhantomSpec defaults, const std::string& where);

/// Experiment config file:
///
///   {
///     "data": {"source": "phantom", "n_pretrain": 10, "n_test": 16, "phantom": {...}}
///           | {"source": "manifests", "pretrain": "p.json", "one_shot": "o.json", "test": "t.json"},
///     "model": {"hidden": 32},
///     "stages": {"pretrain": {...}, "warmup": {...}, "finetune": {...}},
///     "methods": ["cft", "ift", "ours"],
///     "strategies": ["rc1", "rc2", "tc1", "tc2"],
///     "warmup_includes_real": true,
///     "seeds": {"master": 0},
///     "output": {"write_predictions": true}
///   }
///
/// Every section is optional. Relative manifest paths resolve against
/// `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace tractaug
