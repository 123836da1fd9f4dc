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

// Exercises the shared library through its C header only.
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "tractaug/tractaug.h"

namespace fs = std::filesystem;

namespace {

ta_mask* make_mask(const std::vector<uint8_t>& bits) {
  const int64_t dims[3] = {2, 2, 2};
  const float spacing[3] = {1.f, 1.f, 1.f};
  ta_mask* m = nullptr;
  REQUIRE(ta_mask_create(dims, spacing, bits.data(), &m) == TA_OK);
  return m;
}

ta_labels* make_labels(std::vector<ta_mask*> masks) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < masks.size(); ++i) names.push_back("T" + std::to_string(i));
  std::vector<const char*> cnames;
  for (const auto& n : names) cnames.push_back(n.c_str());
  std::vector<const ta_mask*> cm(masks.begin(), masks.end());
  ta_labels* l = nullptr;
  REQUIRE(ta_labels_create(cnames.data(), cm.data(), masks.size(), &l) == TA_OK);
  return l;
}

}  // namespace

TEST_CASE("version, status names, threads") {
  CHECK(std::string(ta_version()) == "1.0.0");
  CHECK(std::string(ta_status_name(TA_ERR_TRUNCATED)) != "");
  CHECK(ta_set_threads(0) == TA_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ta_last_error()).size() > 0);
  CHECK(ta_set_threads(2) == TA_OK);
  CHECK(ta_get_threads() == 2);
  CHECK(ta_set_threads(1) == TA_OK);
  CHECK(ta_set_log_level("loud") == TA_ERR_INVALID_ARGUMENT);
  CHECK(ta_set_log_level("error") == TA_OK);
}

TEST_CASE("volumes and masks round trip through files") {
  const fs::path dir = fs::temp_directory_path() / "tractaug_capi";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const int64_t dims[3] = {3, 2, 2};
  const float spacing[3] = {1.25f, 1.25f, 2.5f};
  std::vector<float> data(12);
  for (int i = 0; i < 12; ++i) data[i] = 0.5f * static_cast<float>(i);
  ta_volume* v = nullptr;
  REQUIRE(ta_volume_create(dims, spacing, data.data(), &v) == TA_OK);
  const std::string path = (dir / "v.nii.gz").string();
  CHECK(ta_volume_write(v, path.c_str()) == TA_OK);
  ta_volume* back = nullptr;
  REQUIRE(ta_volume_read(path.c_str(), &back) == TA_OK);
  int64_t d[3];
  CHECK(ta_volume_dims(back, d) == TA_OK);
  CHECK(d[0] == 3);
  CHECK(d[2] == 2);
  const float* px = nullptr;
  size_t n = 0;
  CHECK(ta_volume_data(back, &px, &n) == TA_OK);
  CHECK(n == 12);
  CHECK(std::memcmp(px, data.data(), 12 * sizeof(float)) == 0);
  ta_volume_free(v);
  ta_volume_free(back);

  ta_volume* missing = nullptr;
  CHECK(ta_volume_read((dir / "none.nii").string().c_str(), &missing) == TA_ERR_IO);
  CHECK(missing == nullptr);
  CHECK(std::string(ta_last_error()).find("none.nii") != std::string::npos);
  CHECK(ta_volume_create(dims, spacing, nullptr, &v) == TA_ERR_INVALID_ARGUMENT);

  ta_mask* m = make_mask({1, 0, 0, 1, 0, 0, 0, 1});
  size_t count = 0;
  CHECK(ta_mask_count(m, &count) == TA_OK);
  CHECK(count == 3);
  const std::string mpath = (dir / "m.nii").string();
  CHECK(ta_mask_write(m, mpath.c_str()) == TA_OK);
  ta_mask* mb = nullptr;
  REQUIRE(ta_mask_read(mpath.c_str(), &mb) == TA_OK);
  const uint8_t* bits = nullptr;
  CHECK(ta_mask_data(mb, &bits, &count) == TA_OK);
  CHECK(count == 8);
  CHECK(bits[3] == 1);
  ta_mask_free(m);
  ta_mask_free(mb);
  ta_mask_free(nullptr);
  fs::remove_all(dir);
}

TEST_CASE("augment, vote, dice, t-test") {
  const int64_t dims[3] = {2, 2, 2};
  const float spacing[3] = {1.f, 1.f, 1.f};
  const float img[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  ta_volume* v = nullptr;
  REQUIRE(ta_volume_create(dims, spacing, img, &v) == TA_OK);
  ta_mask* a = make_mask({1, 1, 0, 0, 0, 0, 0, 0});
  ta_mask* b = make_mask({0, 1, 1, 0, 0, 0, 0, 0});
  ta_mask* c = make_mask({0, 0, 0, 0, 1, 1, 0, 0});
  ta_labels* y = make_labels({a, b, c});

  ta_samples* s = nullptr;
  REQUIRE(ta_augment(v, y, TA_TC1, 3, &s) == TA_OK);
  size_t n = 0;
  CHECK(ta_samples_count(s, &n) == TA_OK);
  CHECK(n == 7);
  ta_labels* sl = nullptr;
  REQUIRE(ta_samples_labels(s, 0, &sl) == TA_OK);  // subset {T0}
  ta_mask* ch = nullptr;
  REQUIRE(ta_labels_channel(sl, 0, &ch) == TA_OK);
  size_t cnt = 0;
  ta_mask_count(ch, &cnt);
  CHECK(cnt == 0);
  const char* name = nullptr;
  CHECK(ta_labels_name(sl, 2, &name) == TA_OK);
  CHECK(std::string(name) == "T2");
  CHECK(ta_labels_name(sl, 3, &name) == TA_ERR_INVALID_ARGUMENT);
  ta_volume* si = nullptr;
  CHECK(ta_samples_image(s, 7, &si) == TA_ERR_INVALID_ARGUMENT);
  ta_mask_free(ch);
  ta_labels_free(sl);
  ta_samples_free(s);

  ta_labels* y2 = make_labels({b, b, c});
  ta_labels* y3 = make_labels({c, c, c});
  const ta_labels* votes[3] = {y, y2, y3};
  ta_labels* out = nullptr;
  REQUIRE(ta_majority_vote(votes, 3, &out) == TA_OK);
  REQUIRE(ta_labels_channel(out, 0, &ch) == TA_OK);
  double d = 0.0;
  // Channel 0 votes a, b, c: only voxel 1 has two of three.
  CHECK(ta_dice(ch, b, &d) == TA_OK);
  CHECK(d == doctest::Approx(2.0 / 3.0));
  CHECK(ta_dice(a, b, &d) == TA_OK);
  CHECK(d == 0.5);
  ta_mask_free(ch);
  ta_labels_free(out);

  const double x[3] = {1, 2, 3}, z[3] = {0, 0, 0};
  double t = 0, p = 0;
  CHECK(ta_paired_t_test(x, z, 3, &t, &p) == TA_OK);
  CHECK(t == doctest::Approx(3.4641016).epsilon(1e-6));
  CHECK(ta_paired_t_test(x, z, 1, &t, &p) == TA_ERR_INVALID_ARGUMENT);

  ta_labels_free(y);
  ta_labels_free(y2);
  ta_labels_free(y3);
  ta_mask_free(a);
  ta_mask_free(b);
  ta_mask_free(c);
  ta_volume_free(v);
}

TEST_CASE("workflows through JSON") {
  const fs::path dir = fs::temp_directory_path() / "tractaug_capi_wf";
  fs::remove_all(dir);
  const std::string opts = R"({"output_dir": ")" + dir.string() +
                           R"(", "seed": 4, "n_pretrain": 1, "n_test": 1,
      "phantom": {"dims": [20, 20, 20], "n_existing_tracts": 2, "n_novel_tracts": 3, "radius_max": 2.0}})";
  char* result = nullptr;
  REQUIRE(ta_run_workflow("phantom", opts.c_str(), &result) == TA_OK);
  CHECK(std::string(result).find("one_shot") != std::string::npos);
  ta_string_free(result);
  CHECK(fs::exists(dir / "one_shot.json"));

  const std::string aug = R"({"output_dir": ")" + (dir / "aug").string() + R"(", "manifest": ")" +
                          (dir / "one_shot.json").string() + R"(", "strategies": ["tc2"]})";
  REQUIRE(ta_run_workflow("augment", aug.c_str(), nullptr) == TA_OK);
  CHECK(fs::exists(dir / "aug" / "tc2" / "manifest.json"));

  CHECK(ta_run_workflow("bogus", "{}", nullptr) == TA_ERR_INVALID_ARGUMENT);
  CHECK(ta_run_workflow("phantom", "{not json", nullptr) == TA_ERR_SCHEMA);
  const std::string extra = R"({"output_dir": ")" + dir.string() + R"(", "colour": 1})";
  CHECK(ta_run_workflow("phantom", extra.c_str(), nullptr) == TA_ERR_SCHEMA);
  fs::remove_all(dir);
}
