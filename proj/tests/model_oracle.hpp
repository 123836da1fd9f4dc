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

#include <cmath>
#include <cstdint>
#include <vector>

#include "tractaug/model.hpp"

namespace testutil {

// Naive long-double forward pass for one voxel: logits per tract.
inline std::vector<long double> reference_logits(const tractaug::SegmenterModel& m, const std::vector<long double>& p,
                                                 const double* feats) {
  const std::size_t F = m.feature_count, H = m.hidden, T = m.tracts();
  std::vector<long double> hidden(H);
  for (std::size_t h = 0; h < H; ++h) {
    long double a = p[F * H + h];
    for (std::size_t f = 0; f < F; ++f)
      a += (static_cast<long double>(feats[f]) - m.input_shift[f]) * m.input_scale[f] * p[f * H + h];
    hidden[h] = a > 0 ? a : 0;
  }
  std::vector<long double> out(T);
  const std::size_t w2 = F * H + H, b2 = w2 + H * T;
  for (std::size_t t = 0; t < T; ++t) {
    long double z = p[b2 + t];
    for (std::size_t h = 0; h < H; ++h) z += hidden[h] * p[w2 + h * T + t];
    out[t] = z;
  }
  return out;
}

// Mean BCE over voxels and tracts from the naive forward pass.
inline long double reference_loss(const tractaug::SegmenterModel& m, const std::vector<long double>& p,
                                  const std::vector<double>& feats, const std::vector<std::uint8_t>& labels,
                                  std::size_t voxels) {
  const std::size_t T = m.tracts();
  long double total = 0;
  for (std::size_t v = 0; v < voxels; ++v) {
    const auto z = reference_logits(m, p, feats.data() + v * m.feature_count);
    for (std::size_t t = 0; t < T; ++t) {
      const long double prob = 1.0L / (1.0L + std::exp(-z[t]));
      total -= labels[v * T + t] ? std::log(prob) : std::log(1.0L - prob);
    }
  }
  return total / static_cast<long double>(voxels * T);
}

}  // namespace testutil
