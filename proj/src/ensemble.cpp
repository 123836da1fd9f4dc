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

#include "tractaug/ensemble.hpp"

#include "tractaug/error.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

TractLabelMap majority_vote(std::span<const TractLabelMap> predictions) {
  if (predictions.empty()) fail(ErrorCode::InvalidArgument, "majority_vote needs at least one prediction");
  const TractLabelMap& first = predictions.front();
  for (std::size_t k = 1; k < predictions.size(); ++k) {
    require_same_geometry(first.geometry(), predictions[k].geometry(), "majority_vote");
    if (predictions[k].names() != first.names())
      fail(ErrorCode::InvalidArgument, "majority_vote: prediction " + std::to_string(k) +
                                           " has different tract channels than prediction 0");
  }
  const std::size_t k = predictions.size();
  TractLabelMap out = first;
  parallel_for(out.channel_count(), [&](std::size_t j) {
    auto dst = out.channel(j).data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      std::size_t votes = 0;
      for (const auto& p : predictions) votes += p.channel(j).data()[i];
      // votes >= K/2  <=>  2 * votes >= K
      dst[i] = 2 * votes >= k ? 1 : 0;
    }
  });
  return out;
}

}  // namespace tractaug
