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

#include <string>

#include "json.hpp"

namespace tractaug {

/// Runs one command-line workflow from a JSON options object and returns a
/// JSON summary. Names: "phantom", "augment", "train-pretrain", "adapt",
/// "predict", "ensemble", "dice", "experiment".
///
/// Every workflow takes "output_dir" (created if missing; nothing is written
/// elsewhere) and an optional "seed". Unknown option keys are schema errors.
/// Failures propagate as tractaug::Error.
nlohmann::json run_workflow(const std::string& name, const nlohmann::json& options);

}  // namespace tractaug
