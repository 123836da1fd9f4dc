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

#include <cstring>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "tractaug/error.hpp"
#include "tractaug/nifti_io.hpp"

using namespace tractaug;
using testutil::random_mask;
using testutil::random_volume;

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(Geometry::make({4, 5, 6}, {1.25f, 1.25f, 2.5f}).validate());
  CHECK_THROWS_AS(Geometry::make({0, 5, 6}).validate(), Error);
  CHECK_THROWS_AS(Geometry::make({4, 5, 6}, {1.f, -1.f, 1.f}).validate(), Error);
  Geometry g = Geometry::make({2, 2, 2});
  g.affine[5] = 0.f;  // singular 3x3 block
  CHECK_THROWS_AS(g.validate(), Error);
  CHECK(g.index(1, 0, 0) == 1);
  CHECK(Geometry::make({3, 4, 5}).index(0, 1, 0) == 3);
  CHECK(Geometry::make({3, 4, 5}).index(0, 0, 1) == 12);
}

TEST_CASE("volume rejects wrong length and non-finite values") {
  const Geometry g = Geometry::make({2, 2, 2});
  CHECK_THROWS_AS(Volume3D(g, std::vector<float>(7)), Error);
  std::vector<float> v(8, 0.f);
  v[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(Volume3D(g, v), Error);
}

TEST_CASE("label map invariants") {
  const Geometry g = Geometry::make({2, 2, 2});
  CHECK_THROWS_AS(TractLabelMap({}, {}), Error);
  CHECK_THROWS_AS(TractLabelMap({"a", "a"}, {BinaryMask3D(g), BinaryMask3D(g)}), Error);
  CHECK_THROWS_AS(TractLabelMap({"a", "b"}, {BinaryMask3D(g), BinaryMask3D(Geometry::make({2, 2, 3}))}), Error);
  TractLabelMap y({"a", "b"}, {BinaryMask3D(g), BinaryMask3D(g)});
  CHECK(y.find("b") == 1);
  CHECK_THROWS_AS(y.find("c"), Error);
}

TEST_CASE("apply_mask examples") {
  const Geometry g = Geometry::make({2, 2, 2});
  const Volume3D ones(g, std::vector<float>(8, 1.f));
  CHECK(apply_mask(ones, BinaryMask3D(g)) == ones);
  CHECK(apply_mask(ones, BinaryMask3D(g, std::vector<std::uint8_t>(8, 1))) == Volume3D(g));

  BinaryMask3D one(g);
  one.set(g.index(1, 0, 1), true);
  const Volume3D out = apply_mask(ones, one);
  int zeros = 0;
  for (float v : out.data()) zeros += v == 0.f;
  CHECK(zeros == 1);
  CHECK(out.at(1, 0, 1) == 0.f);

  try {
    apply_mask(ones, BinaryMask3D(Geometry::make({2, 3, 2})));
    FAIL("expected a geometry mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeometryMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("2x2x2") != std::string::npos);
    CHECK(msg.find("2x3x2") != std::string::npos);
  }
}

TEST_CASE("apply_mask is idempotent and preserves unmasked voxels") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Geometry g = testutil::random_geometry(rng, 8);
    const Volume3D x = random_volume(g, rng);
    const BinaryMask3D m = random_mask(g, rng);
    const Volume3D once = apply_mask(x, m);
    CHECK(apply_mask(once, m) == once);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (m.data()[i]) {
        CHECK(once.data()[i] == 0.f);
      } else {
        CHECK(std::memcmp(&once.data()[i], &x.data()[i], sizeof(float)) == 0);
      }
    }
  }
}

TEST_CASE("mask_union examples and set laws") {
  const Geometry g = Geometry::make({4, 4, 1});
  CHECK_THROWS_AS(mask_union({}), Error);

  BinaryMask3D a(g), b(g);
  for (int i = 0; i < 3; ++i) a.set(i, true);
  for (int i = 8; i < 13; ++i) b.set(i, true);
  std::vector<BinaryMask3D> one{a};
  CHECK(mask_union(one) == a);
  std::vector<BinaryMask3D> ab{a, b};
  CHECK(mask_union(ab).count() == 8);
  std::vector<BinaryMask3D> aa{a, a};
  CHECK(mask_union(aa) == a);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Geometry h = testutil::random_geometry(rng, 5);
    const BinaryMask3D p = random_mask(h, rng), q = random_mask(h, rng), r = random_mask(h, rng);
    auto u = [](std::vector<BinaryMask3D> v) { return mask_union(v); };
    CHECK(u({p, q}) == u({q, p}));
    CHECK(u({u({p, q}), r}) == u({p, u({q, r})}));
    CHECK(u({p, p}) == p);
  }
  std::vector<BinaryMask3D> mixed{a, BinaryMask3D(Geometry::make({4, 4, 2}))};
  CHECK_THROWS_AS(mask_union(mixed), Error);
}

TEST_CASE("content_hash") {
  Rng rng(9);
  const Geometry g = Geometry::make({5, 4, 3});
  const Volume3D x = random_volume(g, rng);
  CHECK(content_hash(x) == content_hash(x));
  Volume3D y = x;
  y.data()[7] += 1.f;
  CHECK(content_hash(y) != content_hash(x));

  BinaryMask3D m = random_mask(g, rng);
  BinaryMask3D flipped = m;
  flipped.set(3, !m.data()[3]);
  CHECK(content_hash(flipped) != content_hash(m));

  // Geometry is part of the digest.
  const Volume3D z(Geometry::make({5, 4, 3}, {1.f, 1.f, 2.f}), std::vector<float>(x.data().begin(), x.data().end()));
  CHECK(content_hash(z) != content_hash(x));

  // Survives a serialize/deserialize round trip.
  const auto dir = testutil::temp_dir("hash");
  nifti::write_volume(x, dir / "x.nii");
  CHECK(content_hash(nifti::read_volume(dir / "x.nii")) == content_hash(x));
  nifti::write_mask(m, dir / "m.nii.gz");
  CHECK(content_hash(nifti::read_mask(dir / "m.nii.gz")) == content_hash(m));
  std::filesystem::remove_all(dir);
}
