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
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "tractaug/error.hpp"
#include "tractaug/manifest.hpp"
#include "tractaug/nifti_io.hpp"

using namespace tractaug;
namespace fs = std::filesystem;

namespace {

// Minimal hand-rolled NIfTI-1 writer, independent of the library encoder.
struct RawHeader {
  std::vector<unsigned char> bytes = std::vector<unsigned char>(352, 0);
  bool big_endian = false;

  template <typename T>
  void put(std::size_t at, T v) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if (big_endian) std::reverse(raw, raw + sizeof(T));
    std::memcpy(bytes.data() + at, raw, sizeof(T));
  }

  RawHeader(std::vector<short> dims, short datatype, short bitpix, bool be = false) : big_endian(be) {
    put<int>(0, 348);
    put<short>(40, static_cast<short>(dims.size()));
    for (std::size_t i = 0; i < 7; ++i) put<short>(42 + 2 * i, i < dims.size() ? dims[i] : short{1});
    put<short>(70, datatype);
    put<short>(72, bitpix);
    for (int i = 0; i < 4; ++i) put<float>(76 + 4 * i, 1.f);
    put<float>(108, 352.f);
    std::memcpy(bytes.data() + 344, "n+1\0", 4);
  }

  template <typename T>
  void append(const std::vector<T>& values) {
    for (T v : values) {
      unsigned char raw[sizeof(T)];
      std::memcpy(raw, &v, sizeof(T));
      if (big_endian) std::reverse(raw, raw + sizeof(T));
      bytes.insert(bytes.end(), raw, raw + sizeof(T));
    }
  }

  void save(const fs::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
};

ErrorCode read_error(const fs::path& p) {
  try {
    nifti::read_volume(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("read succeeded");
  return ErrorCode::Io;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("volume round trip, plain and gzip") {
  const auto dir = testutil::temp_dir("nifti_rt");
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Geometry g = testutil::random_geometry(rng, 9);
    g.spacing = {1.25f, 1.25f, 2.5f};
    g.affine[0] = 1.25f;
    g.affine[5] = 1.25f;
    g.affine[10] = 2.5f;
    g.affine[3] = -30.5f;
    const Volume3D x = testutil::random_volume(g, rng);
    nifti::write_volume(x, dir / "x.nii");
    nifti::write_volume(x, dir / "x.nii.gz");
    const Volume3D a = nifti::read_volume(dir / "x.nii");
    const Volume3D b = nifti::read_volume(dir / "x.nii.gz");
    CHECK(a == x);
    CHECK(b == a);
    CHECK(a.geometry() == g);
  }
  fs::remove_all(dir);
}

TEST_CASE("mask round trip and deterministic bytes") {
  const auto dir = testutil::temp_dir("nifti_mask");
  const Geometry g = Geometry::make({6, 5, 4});
  BinaryMask3D m(g);
  for (std::size_t i : {0u, 7u, 19u, 63u, 119u}) m.set(i, true);
  nifti::write_mask(m, dir / "m.nii.gz");
  const BinaryMask3D back = nifti::read_mask(dir / "m.nii.gz");
  CHECK(back.count() == 5);
  CHECK(back == m);
  nifti::write_mask(m, dir / "m2.nii.gz");
  CHECK(file_bytes(dir / "m.nii.gz") == file_bytes(dir / "m2.nii.gz"));
  nifti::write_mask(m, dir / "m.nii");
  CHECK(file_bytes(dir / "m.nii").size() == 352 + 120);
  fs::remove_all(dir);
}

TEST_CASE("every supported datatype reads back, both byte orders") {
  const auto dir = testutil::temp_dir("nifti_types");
  const std::vector<double> expect{0, 1, 2, 3, 4, 5, 6, 7};
  for (bool be : {false, true}) {
    RawHeader u8({2, 2, 2}, 2, 8, be);
    u8.append(std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 6, 7});
    RawHeader i16({2, 2, 2}, 4, 16, be);
    i16.append(std::vector<std::int16_t>{0, 1, 2, 3, 4, 5, 6, 7});
    RawHeader i32({2, 2, 2}, 8, 32, be);
    i32.append(std::vector<std::int32_t>{0, 1, 2, 3, 4, 5, 6, 7});
    RawHeader f64({2, 2, 2}, 64, 64, be);
    f64.append(expect);
    for (auto* h : {&u8, &i16, &i32, &f64}) {
      h->save(dir / "t.nii");
      const Volume3D v = nifti::read_volume(dir / "t.nii");
      REQUIRE(v.size() == 8);
      for (std::size_t i = 0; i < 8; ++i) CHECK(v.data()[i] == static_cast<float>(expect[i]));
    }
  }
  // scl_slope / scl_inter are applied when the slope is non-zero.
  RawHeader s({2, 1, 1}, 4, 16);
  s.put<float>(112, 0.5f);
  s.put<float>(116, 10.f);
  s.append(std::vector<std::int16_t>{2, 4});
  s.save(dir / "s.nii");
  const Volume3D v = nifti::read_volume(dir / "s.nii");
  CHECK(v.data()[0] == 11.f);
  CHECK(v.data()[1] == 12.f);
  fs::remove_all(dir);
}

TEST_CASE("sform preferred over qform, pixdim fallback") {
  const auto dir = testutil::temp_dir("nifti_affine");
  RawHeader h({2, 2, 2}, 16, 32);
  h.put<float>(80, 2.f);
  h.put<short>(252, 1);  // qform_code
  h.put<float>(268, 5.f);  // qoffset_x
  h.put<short>(254, 1);  // sform_code
  const float srow[12] = {3, 0, 0, 7, 0, 1, 0, 0, 0, 0, 1, 0};
  for (int i = 0; i < 12; ++i) h.put<float>(280 + 4 * i, srow[i]);
  h.append(std::vector<float>(8, 0.f));
  h.save(dir / "a.nii");
  CHECK(nifti::read_volume(dir / "a.nii").geometry().affine[0] == 3.f);
  CHECK(nifti::read_volume(dir / "a.nii").geometry().affine[3] == 7.f);

  h.put<short>(254, 0);
  h.save(dir / "a.nii");
  const auto q = nifti::read_volume(dir / "a.nii").geometry();
  CHECK(q.affine[0] == 2.f);  // identity quaternion scaled by pixdim
  CHECK(q.affine[3] == 5.f);

  h.put<short>(252, 0);
  h.save(dir / "a.nii");
  const auto p = nifti::read_volume(dir / "a.nii").geometry();
  CHECK(p.affine[0] == 2.f);
  CHECK(p.affine[3] == 0.f);
  fs::remove_all(dir);
}

TEST_CASE("distinct read errors") {
  const auto dir = testutil::temp_dir("nifti_err");
  CHECK(read_error(dir / "missing.nii") == ErrorCode::Io);

  RawHeader two_d({4, 4}, 16, 32);
  two_d.append(std::vector<float>(16, 0.f));
  two_d.save(dir / "2d.nii");
  CHECK(read_error(dir / "2d.nii") == ErrorCode::NotThreeD);

  RawHeader four_d({2, 2, 2, 3}, 16, 32);
  four_d.append(std::vector<float>(24, 0.f));
  four_d.save(dir / "4d.nii");
  CHECK(read_error(dir / "4d.nii") == ErrorCode::NotThreeD);

  RawHeader magic({2, 2, 2}, 16, 32);
  magic.append(std::vector<float>(8, 0.f));
  magic.bytes[345] = 'i';
  magic.save(dir / "magic.nii");
  CHECK(read_error(dir / "magic.nii") == ErrorCode::BadMagic);

  RawHeader rgb({2, 2, 2}, 128, 24);
  rgb.append(std::vector<std::uint8_t>(24, 0));
  rgb.save(dir / "rgb.nii");
  CHECK(read_error(dir / "rgb.nii") == ErrorCode::UnsupportedDatatype);

  RawHeader cut({2, 2, 2}, 16, 32);
  cut.append(std::vector<float>(7, 0.f));
  cut.save(dir / "cut.nii");
  CHECK(read_error(dir / "cut.nii") == ErrorCode::Truncated);

  std::ofstream(dir / "short.nii") << "tiny";
  CHECK(read_error(dir / "short.nii") == ErrorCode::Truncated);

  // A gzip stream cut mid-way.
  nifti::write_volume(Volume3D(Geometry::make({8, 8, 8})), dir / "z.nii.gz");
  auto z = file_bytes(dir / "z.nii.gz");
  z.resize(z.size() / 2);
  std::ofstream(dir / "z.nii.gz", std::ios::binary).write(reinterpret_cast<const char*>(z.data()),
                                                          static_cast<std::streamsize>(z.size()));
  CHECK(read_error(dir / "z.nii.gz") == ErrorCode::Truncated);

  CHECK_THROWS_AS(nifti::write_volume(Volume3D(Geometry::make({2, 2, 2})), dir / "no" / "such" / "x.nii"), Error);
  fs::remove_all(dir);
}

TEST_CASE("manifest round trips") {
  const auto dir = testutil::temp_dir("manifest");
  DatasetManifest empty;
  write_manifest(empty, dir / "empty.json");
  CHECK(read_manifest(dir / "empty.json") == empty);

  DatasetManifest m;
  m.tracts = {"CST_left", "OR_left"};
  m.entries.push_back({"s0", dir / "s0/image.nii.gz",
                       {{"CST_left", dir / "s0/CST_left.nii.gz"}, {"OR_left", dir / "s0/OR_left.nii.gz"}},
                       Provenance::real()});
  m.entries.push_back({"s0-rc1-000", dir / "syn/image.nii.gz",
                       {{"CST_left", dir / "syn/CST_left.nii.gz"}, {"OR_left", dir / "syn/OR_left.nii.gz"}},
                       Provenance::synthetic(Strategy::RC1, 7, 0)});
  write_manifest(m, dir / "m.json");
  const DatasetManifest back = read_manifest(dir / "m.json");
  CHECK(back == m);
  CHECK(back.entries[1].provenance.strategy == Strategy::RC1);
  CHECK(back.entries[1].provenance.seed == 7);
  CHECK(back.entries[1].provenance.sample_index == 0);

  // Paths under the manifest directory are stored relative.
  std::ifstream in(dir / "m.json");
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  CHECK(text.find("\"s0/image.nii.gz\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("manifest schema errors") {
  const auto dir = testutil::temp_dir("manifest_err");
  auto code_of = [&](const std::string& text) {
    std::ofstream(dir / "bad.json") << text;
    try {
      read_manifest(dir / "bad.json");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Training;  // sentinel: no error
  };
  const std::string entry =
      R"({"sample_id": "a", "image": "a.nii", "labels": [{"tract": "T", "path": "t.nii"}], "provenance": {"kind": "real"}})";
  CHECK(code_of(R"({"format_version": 1, "tracts": ["T"], "entries": [)" + entry + "]}") == ErrorCode::Training);
  CHECK(code_of(R"({"format_version": 1, "tracts": ["T"], "entries": [)" + entry + "," + entry + "]}") ==
        ErrorCode::Schema);
  CHECK(code_of(R"({"format_version": 1, "tracts": ["T"], "entries": [], "extra": 1})") == ErrorCode::Schema);
  CHECK(code_of(R"({"format_version": 2, "tracts": [], "entries": []})") == ErrorCode::Schema);
  CHECK(code_of(R"({"format_version": 1, "tracts": ["T", "U"], "entries": [)" + entry + "]}") == ErrorCode::Schema);
  CHECK(code_of("not json") == ErrorCode::Schema);
  CHECK_THROWS_AS(read_manifest(dir / "none.json"), Error);

  std::ofstream(dir / "bad.json") << R"({"format_version": 1, "tracts": [], "entries": [], "bogus": 0})";
  try {
    read_manifest(dir / "bad.json");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  fs::remove_all(dir);
}
