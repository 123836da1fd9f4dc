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

#include "tractaug/augment.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_set>

#include "tractaug/error.hpp"
#include "tractaug/log.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

std::size_t TractSubset::selected() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::uint64_t TractSubset::code() const {
  std::uint64_t c = 0;
  for (std::size_t j = 0; j < bits.size() && j < 64; ++j)
    if (bits[j]) c |= std::uint64_t{1} << j;
  return c;
}

std::size_t synthetic_count(std::size_t n_tracts) {
  if (n_tracts == 0) fail(ErrorCode::InvalidArgument, "synthetic_count needs at least one tract");
  if (n_tracts >= 7) return kMaxSyntheticSamples;  // 2^7 - 1 = 127 > 100
  return std::min<std::size_t>((std::size_t{1} << n_tracts) - 1, kMaxSyntheticSamples);
}

AugmentationPlan AugmentationPlan::for_tracts(Strategy strategy, std::size_t n_tracts, std::uint64_t master_seed) {
  return {strategy, synthetic_count(n_tracts), master_seed};
}

std::uint64_t sample_seed(std::uint64_t master_seed, Strategy strategy, std::size_t index) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(strategy), index);
}

double sample_lambda(Rng& rng) { return rng.uniform(); }

BoxRegion make_box(const Geometry& geometry, double lambda, std::array<double, 3> origin) {
  BoxRegion box;
  box.lambda = lambda;
  box.origin = origin;
  const double scale = std::sqrt(std::max(0.0, 1.0 - lambda));
  for (int i = 0; i < 3; ++i) box.extent[i] = static_cast<double>(geometry.dims[i]) * scale;
  return box;
}

BoxRegion sample_box(const Geometry& geometry, Rng& rng) {
  const double lambda = sample_lambda(rng);
  std::array<double, 3> origin{};
  for (int i = 0; i < 3; ++i) origin[i] = rng.uniform(0.0, static_cast<double>(geometry.dims[i]));
  return make_box(geometry, lambda, origin);
}

BinaryMask3D box_to_mask(const BoxRegion& box, const Geometry& geometry) {
  BinaryMask3D mask(geometry);
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int i = 0; i < 3; ++i) {
    if (!(box.extent[i] >= 1.0) || box.origin[i] < 0.0 || !std::isfinite(box.origin[i])) return mask;
    lo[i] = static_cast<std::int64_t>(std::floor(box.origin[i]));
    hi[i] = std::min(static_cast<std::int64_t>(std::floor(box.origin[i] + box.extent[i])), geometry.dims[i] - 1);
    if (lo[i] > hi[i]) return mask;
  }
  auto bits = mask.data();
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
      for (std::int64_t x = lo[0]; x <= hi[0]; ++x) bits[geometry.index(x, y, z)] = 1;
  return mask;
}

TractSubset sample_tract_subset(std::size_t n_tracts, Rng& rng) {
  if (n_tracts == 0) fail(ErrorCode::InvalidArgument, "sample_tract_subset needs at least one tract");
  TractSubset subset;
  subset.bits.resize(n_tracts);
  do {
    for (auto& b : subset.bits) b = rng.bernoulli(0.5) ? 1 : 0;
  } while (subset.selected() == 0);
  return subset;
}

TractSubset subset_from_code(std::size_t n_tracts, std::uint64_t code) {
  if (n_tracts == 0 || n_tracts > 64 || code == 0 || (n_tracts < 64 && code >> n_tracts))
    fail(ErrorCode::InvalidArgument, "subset code out of range");
  TractSubset subset;
  subset.bits.resize(n_tracts);
  for (std::size_t j = 0; j < n_tracts; ++j) subset.bits[j] = (code >> j) & 1;
  return subset;
}

BinaryMask3D subset_to_mask(const TractLabelMap& labels, const TractSubset& subset) {
  if (subset.bits.size() != labels.channel_count())
    fail(ErrorCode::InvalidArgument, "subset has " + std::to_string(subset.bits.size()) + " bits for " +
                                         std::to_string(labels.channel_count()) + " tracts");
  BinaryMask3D mask(labels.geometry());
  auto dst = mask.data();
  for (std::size_t j = 0; j < subset.bits.size(); ++j) {
    if (!subset.bits[j]) continue;
    auto src = labels.channel(j).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
  }
  return mask;
}

TractLabelMap derive_labels(const TractLabelMap& labels, const BinaryMask3D& m, Strategy strategy) {
  require_same_geometry(labels.geometry(), m.geometry(), "derive_labels");
  if (!masks_labels(strategy)) return labels;
  TractLabelMap out = labels;
  auto bits = m.data();
  for (std::size_t j = 0; j < out.channel_count(); ++j) {
    auto dst = out.channel(j).data();
    for (std::size_t i = 0; i < dst.size(); ++i)
      if (bits[i]) dst[i] = 0;
  }
  return out;
}

namespace {

// Per-index generator state; redraws continue the same stream.
struct Candidate {
  std::optional<Rng> rng;
  std::uint64_t seed = 0;
  std::optional<SyntheticSample> sample;
  std::uint64_t hash = 0;
};

SyntheticSample realize(const Volume3D& x, const TractLabelMap& y, Strategy strategy, std::uint64_t seed,
                        std::size_t index, CutoutProvenance provenance) {
  const BinaryMask3D m = std::holds_alternative<BoxRegion>(provenance)
                             ? box_to_mask(std::get<BoxRegion>(provenance), x.geometry())
                             : subset_to_mask(y, std::get<TractSubset>(provenance));
  return {apply_mask(x, m), derive_labels(y, m, strategy), strategy, seed, index, std::move(provenance)};
}

}  // namespace

std::vector<SyntheticSample> generate_dataset(const Volume3D& x, const TractLabelMap& y, const AugmentationPlan& plan,
                                              std::size_t retry_budget) {
  require_same_geometry(x.geometry(), y.geometry(), "generate_dataset");
  if (plan.count < 1) fail(ErrorCode::InvalidArgument, "augmentation plan count must be >= 1");
  const std::size_t n = y.channel_count();
  const bool tract_cutout = !is_random_cutout(plan.strategy);
  const bool enumerate = tract_cutout && n < 7 && ((std::size_t{1} << n) - 1) <= kMaxSyntheticSamples;
  if (enumerate && plan.count > (std::size_t{1} << n) - 1)
    fail(ErrorCode::AugmentationExhausted, "only " + std::to_string((std::size_t{1} << n) - 1) +
                                               " non-empty tract subsets exist for " + std::to_string(n) +
                                               " tracts, " + std::to_string(plan.count) + " requested");

  auto draw = [&](Candidate& c) -> CutoutProvenance {
    if (tract_cutout) return sample_tract_subset(n, *c.rng);
    return sample_box(x.geometry(), *c.rng);
  };

  std::vector<Candidate> cands(plan.count);
  parallel_for(plan.count, [&](std::size_t i) {
    Candidate& c = cands[i];
    c.seed = sample_seed(plan.master_seed, plan.strategy, i);
    c.rng.emplace(c.seed);
    CutoutProvenance prov = enumerate ? CutoutProvenance(subset_from_code(n, i + 1)) : draw(c);
    c.sample = realize(x, y, plan.strategy, c.seed, i, std::move(prov));
    c.hash = content_hash(c.sample->image, c.sample->labels);
  });

  // Sequential pass in index order keeps collision handling independent of
  // the worker count. The source pair counts as already produced.
  std::unordered_set<std::uint64_t> seen_hashes{content_hash(x, y)};
  std::unordered_set<std::uint64_t> seen_subsets;
  std::vector<SyntheticSample> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    Candidate& c = cands[i];
    auto subset_code = [&] {
      return tract_cutout ? std::get<TractSubset>(c.sample->provenance).code() : std::uint64_t{0};
    };
    std::size_t retries = 0;
    while (seen_hashes.count(c.hash) || (tract_cutout && !enumerate && seen_subsets.count(subset_code()))) {
      if (enumerate || retries == retry_budget)
        fail(ErrorCode::AugmentationExhausted,
             to_string(plan.strategy) + ": cannot produce " + std::to_string(plan.count) +
                 " distinct samples (sample " + std::to_string(i) + " duplicates earlier content after " +
                 std::to_string(retries) + " redraws)");
      ++retries;
      c.sample = realize(x, y, plan.strategy, c.seed, i, draw(c));
      c.hash = content_hash(c.sample->image, c.sample->labels);
    }
    if (retries) log::debug(to_string(plan.strategy), " sample ", i, " redrawn ", retries, " time(s)");
    seen_hashes.insert(c.hash);
    if (tract_cutout) seen_subsets.insert(subset_code());
    out.push_back(std::move(*c.sample));
    c.sample.reset();
  }
  return out;
}

}  // namespace tractaug
