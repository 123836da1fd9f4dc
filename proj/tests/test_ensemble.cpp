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

#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "tractaug/ensemble.hpp"
#include "tractaug/error.hpp"

using namespace tractaug;

namespace {

TractLabelMap one_voxel(bool v) {
  const Geometry g = Geometry::make({1, 1, 1});
  return TractLabelMap({"t"}, {BinaryMask3D(g, {static_cast<std::uint8_t>(v)})});
}

}  // namespace

TEST_CASE("documented votes") {
  auto vote = [](std::vector<int> v) {
    std::vector<TractLabelMap> p;
    for (int b : v) p.push_back(one_voxel(b));
    return majority_vote(p).channel(0).data()[0];
  };
  CHECK(vote({1, 1, 0, 0}) == 1);
  CHECK(vote({1, 0, 0, 0}) == 0);
  CHECK(vote({1, 1, 1, 0}) == 1);
  CHECK(vote({0}) == 0);
  CHECK(vote({1}) == 1);
  CHECK(vote({1, 0}) == 1);
  CHECK(vote({1, 0, 0}) == 0);
  CHECK(vote({1, 1, 0}) == 1);
}

TEST_CASE("unanimity and permutation invariance") {
  Rng rng(6);
  const Geometry g = Geometry::make({5, 4, 3});
  const TractLabelMap y = testutil::random_labels(g, 3, rng);
  std::vector<TractLabelMap> same(4, y);
  CHECK(majority_vote(same) == y);

  std::vector<TractLabelMap> preds;
  for (int k = 0; k < 5; ++k) preds.push_back(testutil::random_labels(g, 3, rng, 0.5));
  const TractLabelMap ref = majority_vote(preds);
  for (int i = 0; i < 20; ++i) {
    for (std::size_t j = preds.size() - 1; j > 0; --j) std::swap(preds[j], preds[rng.below(j + 1)]);
    CHECK(majority_vote(preds) == ref);
  }
}

TEST_CASE("misaligned inputs") {
  const Geometry g = Geometry::make({2, 2, 2});
  CHECK_THROWS_AS(majority_vote({}), Error);
  std::vector<TractLabelMap> geom{TractLabelMap({"a"}, {BinaryMask3D(g)}),
                                  TractLabelMap({"a"}, {BinaryMask3D(Geometry::make({2, 2, 3}))})};
  CHECK_THROWS_AS(majority_vote(geom), Error);
  std::vector<TractLabelMap> names{TractLabelMap({"a", "b"}, {BinaryMask3D(g), BinaryMask3D(g)}),
                                   TractLabelMap({"b", "a"}, {BinaryMask3D(g), BinaryMask3D(g)})};
  CHECK_THROWS_AS(majority_vote(names), Error);
}
