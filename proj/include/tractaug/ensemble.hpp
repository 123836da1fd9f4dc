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

#include <span>

#include "tractaug/volume.hpp"

namespace tractaug {

// Per voxel and channel: 1 iff the number of 1-votes is at least K/2, so an
// exact tie among an even number of models resolves to 1. All predictions
// must share geometry and channel names in the same order.
TractLabelMap majority_vote(std::span<const TractLabelMap> predictions);

}  // namespace tractaug
