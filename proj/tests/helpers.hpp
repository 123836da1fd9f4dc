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

#include <filesystem>
#include <string>
#include <vector>

#include "tractaug/rng.hpp"
#include "tractaug/volume.hpp"

namespace testutil {

using namespace tractaug;

inline Geometry random_geometry(Rng& rng, std::int64_t max_side = 16) {
  Dims d;
  for (auto& v : d) v = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_side)));
  return Geometry::make(d);
}

inline Volume3D random_volume(const Geometry& g, Rng& rng) {
  std::vector<float> v(g.voxel_count());
  for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  return Volume3D(g, std::move(v));
}

inline BinaryMask3D random_mask(const Geometry& g, Rng& rng, double p = 0.3) {
  std::vector<std::uint8_t> b(g.voxel_count());
  for (auto& x : b) x = rng.bernoulli(p) ? 1 : 0;
  return BinaryMask3D(g, std::move(b));
}

inline TractLabelMap random_labels(const Geometry& g, std::size_t n, Rng& rng, double p = 0.3) {
  std::vector<std::string> names;
  std::vector<BinaryMask3D> ch;
  for (std::size_t j = 0; j < n; ++j) {
    names.push_back("T" + std::to_string(j));
    ch.push_back(random_mask(g, rng, p));
  }
  return TractLabelMap(std::move(names), std::move(ch));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tractaug_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
