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

#include <array>
#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "tractaug/rng.hpp"
#include "tractaug/strategy.hpp"
#include "tractaug/volume.hpp"

namespace tractaug {

/// Random cutout box: origin r and extent w per axis (voxel units) and the
/// shared Beta(1,1) draw that set w = R * sqrt(1 - lambda).
///
/// Rasterized voxel set per axis: [floor(r), min(floor(r + w), R - 1)],
/// empty when w < 1 on any axis.
struct BoxRegion {
  std::array<double, 3> origin{};
  std::array<double, 3> extent{};
  double lambda = 0.0;
  bool operator==(const BoxRegion&) const = default;
};

/// Bit j selects tract j for the cutout union. At least one bit is set.
struct TractSubset {
  std::vector<std::uint8_t> bits;
  std::size_t selected() const;
  // Bits read as a binary number with tract 0 as the least significant bit.
  std::uint64_t code() const;
  bool operator==(const TractSubset&) const = default;
};

using CutoutProvenance = std::variant<BoxRegion, TractSubset>;

struct SyntheticSample {
  Volume3D image;
  TractLabelMap labels;
  Strategy strategy = Strategy::RC1;
  std::uint64_t seed = 0;
  std::size_t index = 0;
  CutoutProvenance provenance;
};

struct AugmentationPlan {
  Strategy strategy = Strategy::RC1;
  std::size_t count = 1;
  std::uint64_t master_seed = 0;

  // count = min(2^N - 1, 100).
  static AugmentationPlan for_tracts(Strategy strategy, std::size_t n_tracts, std::uint64_t master_seed);
};

inline constexpr std::size_t kMaxSyntheticSamples = 100;

// min(2^N - 1, 100) for N >= 1.
std::size_t synthetic_count(std::size_t n_tracts);

// Seed of sample `index`; the only input of that sample's random draws.
std::uint64_t sample_seed(std::uint64_t master_seed, Strategy strategy, std::size_t index);

// lambda ~ Beta(1, 1), which is U[0, 1).
double sample_lambda(Rng& rng);

// Draws lambda, then r_x, r_y, r_z, in that order.
BoxRegion sample_box(const Geometry& geometry, Rng& rng);

// Box for a given lambda and origin.
BoxRegion make_box(const Geometry& geometry, double lambda, std::array<double, 3> origin);

BinaryMask3D box_to_mask(const BoxRegion& box, const Geometry& geometry);

// Bernoulli(0.5) per tract, redrawn while all bits are zero.
TractSubset sample_tract_subset(std::size_t n_tracts, Rng& rng);

// Non-empty subset whose code() equals `code` (1 <= code < 2^N).
TractSubset subset_from_code(std::size_t n_tracts, std::uint64_t code);

BinaryMask3D subset_to_mask(const TractLabelMap& labels, const TractSubset& subset);

// *1 strategies: every channel times (1 - m). *2 strategies: verbatim copy.
TractLabelMap derive_labels(const TractLabelMap& labels, const BinaryMask3D& m, Strategy strategy);

/// Produces plan.count pairwise-distinct synthetic samples, in index order.
///
/// TC* with 2^N - 1 <= 100 enumerates the non-empty subsets by ascending
/// code. TC* with more subsets draws without replacement. RC* redraws a box
/// whose (image, labels) hash was already produced. Samples are generated in
/// parallel; the result does not depend on the worker count. Throws
/// AugmentationExhausted when `retry_budget` redraws cannot find a new sample.
std::vector<SyntheticSample> generate_dataset(const Volume3D& x, const TractLabelMap& y, const AugmentationPlan& plan,
                                              std::size_t retry_budget = 64);

}  // namespace tractaug
