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

#include "tractaug/tractaug.h"

#include <cstring>
#include <new>
#include <string>

#include "json.hpp"
#include "tractaug/augment.hpp"
#include "tractaug/ensemble.hpp"
#include "tractaug/error.hpp"
#include "tractaug/log.hpp"
#include "tractaug/metrics.hpp"
#include "tractaug/model.hpp"
#include "tractaug/nifti_io.hpp"
#include "tractaug/parallel.hpp"
#include "tractaug/workflows.hpp"

struct ta_volume {
  tractaug::Volume3D v;
};
struct ta_mask {
  tractaug::BinaryMask3D m;
};
struct ta_labels {
  tractaug::TractLabelMap l;
};
struct ta_model {
  tractaug::SegmenterModel m;
};
struct ta_samples {
  std::vector<tractaug::SyntheticSample> s;
};

namespace {

thread_local std::string g_last_error;

ta_status status_of(tractaug::ErrorCode c) {
  using tractaug::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return TA_ERR_INVALID_ARGUMENT;
    case ErrorCode::GeometryMismatch: return TA_ERR_GEOMETRY_MISMATCH;
    case ErrorCode::Io: return TA_ERR_IO;
    case ErrorCode::BadMagic: return TA_ERR_BAD_MAGIC;
    case ErrorCode::UnsupportedDatatype: return TA_ERR_UNSUPPORTED_DATATYPE;
    case ErrorCode::NotThreeD: return TA_ERR_NOT_3D;
    case ErrorCode::Truncated: return TA_ERR_TRUNCATED;
    case ErrorCode::Schema: return TA_ERR_SCHEMA;
    case ErrorCode::AugmentationExhausted: return TA_ERR_AUGMENTATION_EXHAUSTED;
    case ErrorCode::Training: return TA_ERR_TRAINING;
  }
  return TA_ERR_INTERNAL;
}

ta_status set_error(ta_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename Fn>
ta_status guard(Fn&& fn) {
  try {
    fn();
    return TA_OK;
  } catch (const tractaug::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(TA_ERR_SCHEMA, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(TA_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TA_ERR_INTERNAL, e.what());
  }
}

#define TA_REQUIRE(cond, what)                                                   \
  do {                                                                            \
    if (!(cond)) return set_error(TA_ERR_INVALID_ARGUMENT, std::string(what)); \
  } while (0)

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tractaug::Geometry geometry_of(const int64_t dims[3], const float spacing[3]) {
  const tractaug::Geometry g = tractaug::Geometry::make({dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]});
  g.validate();
  return g;
}

}  // namespace

extern "C" {

const char* ta_version(void) { return "1.0.0"; }

const char* ta_last_error(void) { return g_last_error.c_str(); }

const char* ta_status_name(ta_status s) {
  switch (s) {
    case TA_OK: return "ok";
    case TA_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TA_ERR_GEOMETRY_MISMATCH: return "geometry_mismatch";
    case TA_ERR_IO: return "io";
    case TA_ERR_BAD_MAGIC: return "bad_magic";
    case TA_ERR_UNSUPPORTED_DATATYPE: return "unsupported_datatype";
    case TA_ERR_NOT_3D: return "not_3d";
    case TA_ERR_TRUNCATED: return "truncated";
    case TA_ERR_SCHEMA: return "schema";
    case TA_ERR_AUGMENTATION_EXHAUSTED: return "augmentation_exhausted";
    case TA_ERR_TRAINING: return "training";
    case TA_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void ta_string_free(char* s) { std::free(s); }

ta_status ta_set_threads(int threads) {
  return guard([&] { tractaug::set_thread_count(threads); });
}

int ta_get_threads(void) { return tractaug::thread_count(); }

ta_status ta_set_log_level(const char* level) {
  TA_REQUIRE(level, "log level is NULL");
  return guard([&] { tractaug::log::set_level(tractaug::log::parse_level(level)); });
}

ta_status ta_volume_create(const int64_t dims[3], const float spacing[3], const float* data, ta_volume** out) {
  TA_REQUIRE(dims && spacing && data && out, "ta_volume_create: NULL argument");
  return guard([&] {
    const auto g = geometry_of(dims, spacing);
    *out = new ta_volume{tractaug::Volume3D(g, std::vector<float>(data, data + g.voxel_count()))};
  });
}

ta_status ta_volume_read(const char* path, ta_volume** out) {
  TA_REQUIRE(path && out, "ta_volume_read: NULL argument");
  return guard([&] { *out = new ta_volume{tractaug::nifti::read_volume(path)}; });
}

ta_status ta_volume_write(const ta_volume* v, const char* path) {
  TA_REQUIRE(v && path, "ta_volume_write: NULL argument");
  return guard([&] { tractaug::nifti::write_volume(v->v, path); });
}

ta_status ta_volume_dims(const ta_volume* v, int64_t dims[3]) {
  TA_REQUIRE(v && dims, "ta_volume_dims: NULL argument");
  for (int i = 0; i < 3; ++i) dims[i] = v->v.geometry().dims[i];
  return TA_OK;
}

ta_status ta_volume_data(const ta_volume* v, const float** data, size_t* count) {
  TA_REQUIRE(v && data && count, "ta_volume_data: NULL argument");
  *data = v->v.data().data();
  *count = v->v.size();
  return TA_OK;
}

void ta_volume_free(ta_volume* v) { delete v; }

ta_status ta_mask_create(const int64_t dims[3], const float spacing[3], const uint8_t* data, ta_mask** out) {
  TA_REQUIRE(dims && spacing && data && out, "ta_mask_create: NULL argument");
  return guard([&] {
    const auto g = geometry_of(dims, spacing);
    *out = new ta_mask{tractaug::BinaryMask3D(g, std::vector<std::uint8_t>(data, data + g.voxel_count()))};
  });
}

ta_status ta_mask_read(const char* path, ta_mask** out) {
  TA_REQUIRE(path && out, "ta_mask_read: NULL argument");
  return guard([&] { *out = new ta_mask{tractaug::nifti::read_mask(path)}; });
}

ta_status ta_mask_write(const ta_mask* m, const char* path) {
  TA_REQUIRE(m && path, "ta_mask_write: NULL argument");
  return guard([&] { tractaug::nifti::write_mask(m->m, path); });
}

ta_status ta_mask_data(const ta_mask* m, const uint8_t** data, size_t* count) {
  TA_REQUIRE(m && data && count, "ta_mask_data: NULL argument");
  *data = m->m.data().data();
  *count = m->m.size();
  return TA_OK;
}

ta_status ta_mask_count(const ta_mask* m, size_t* count) {
  TA_REQUIRE(m && count, "ta_mask_count: NULL argument");
  *count = m->m.count();
  return TA_OK;
}

void ta_mask_free(ta_mask* m) { delete m; }

ta_status ta_labels_create(const char* const* names, const ta_mask* const* channels, size_t count, ta_labels** out) {
  TA_REQUIRE(names && channels && out, "ta_labels_create: NULL argument");
  for (size_t i = 0; i < count; ++i) TA_REQUIRE(names[i] && channels[i], "ta_labels_create: NULL entry");
  return guard([&] {
    std::vector<std::string> n;
    std::vector<tractaug::BinaryMask3D> c;
    for (size_t i = 0; i < count; ++i) {
      n.emplace_back(names[i]);
      c.push_back(channels[i]->m);
    }
    *out = new ta_labels{tractaug::TractLabelMap(std::move(n), std::move(c))};
  });
}

ta_status ta_labels_count(const ta_labels* l, size_t* count) {
  TA_REQUIRE(l && count, "ta_labels_count: NULL argument");
  *count = l->l.channel_count();
  return TA_OK;
}

ta_status ta_labels_name(const ta_labels* l, size_t index, const char** name) {
  TA_REQUIRE(l && name, "ta_labels_name: NULL argument");
  TA_REQUIRE(index < l->l.channel_count(), "ta_labels_name: index out of range");
  *name = l->l.name(index).c_str();
  return TA_OK;
}

ta_status ta_labels_channel(const ta_labels* l, size_t index, ta_mask** out) {
  TA_REQUIRE(l && out, "ta_labels_channel: NULL argument");
  TA_REQUIRE(index < l->l.channel_count(), "ta_labels_channel: index out of range");
  return guard([&] { *out = new ta_mask{l->l.channel(index)}; });
}

void ta_labels_free(ta_labels* l) { delete l; }

ta_status ta_augment(const ta_volume* image, const ta_labels* labels, ta_strategy strategy, uint64_t seed,
                     ta_samples** out) {
  TA_REQUIRE(image && labels && out, "ta_augment: NULL argument");
  TA_REQUIRE(strategy >= TA_RC1 && strategy <= TA_TC2, "ta_augment: unknown strategy");
  return guard([&] {
    const auto plan = tractaug::AugmentationPlan::for_tracts(static_cast<tractaug::Strategy>(strategy),
                                                             labels->l.channel_count(), seed);
    *out = new ta_samples{tractaug::generate_dataset(image->v, labels->l, plan)};
  });
}

ta_status ta_samples_count(const ta_samples* s, size_t* count) {
  TA_REQUIRE(s && count, "ta_samples_count: NULL argument");
  *count = s->s.size();
  return TA_OK;
}

ta_status ta_samples_image(const ta_samples* s, size_t index, ta_volume** out) {
  TA_REQUIRE(s && out, "ta_samples_image: NULL argument");
  TA_REQUIRE(index < s->s.size(), "ta_samples_image: index out of range");
  return guard([&] { *out = new ta_volume{s->s[index].image}; });
}

ta_status ta_samples_labels(const ta_samples* s, size_t index, ta_labels** out) {
  TA_REQUIRE(s && out, "ta_samples_labels: NULL argument");
  TA_REQUIRE(index < s->s.size(), "ta_samples_labels: index out of range");
  return guard([&] { *out = new ta_labels{s->s[index].labels}; });
}

void ta_samples_free(ta_samples* s) { delete s; }

ta_status ta_majority_vote(const ta_labels* const* predictions, size_t count, ta_labels** out) {
  TA_REQUIRE(predictions && out, "ta_majority_vote: NULL argument");
  for (size_t i = 0; i < count; ++i) TA_REQUIRE(predictions[i], "ta_majority_vote: NULL entry");
  return guard([&] {
    std::vector<tractaug::TractLabelMap> v;
    for (size_t i = 0; i < count; ++i) v.push_back(predictions[i]->l);
    *out = new ta_labels{tractaug::majority_vote(v)};
  });
}

ta_status ta_dice(const ta_mask* a, const ta_mask* b, double* out) {
  TA_REQUIRE(a && b && out, "ta_dice: NULL argument");
  return guard([&] { *out = tractaug::dice(a->m, b->m); });
}

ta_status ta_paired_t_test(const double* x, const double* y, size_t n, double* t, double* p) {
  TA_REQUIRE(x && y && (t || p), "ta_paired_t_test: NULL argument");
  return guard([&] {
    const auto r = tractaug::paired_t_test({x, n}, {y, n});
    if (t) *t = r.t;
    if (p) *p = r.p;
  });
}

ta_status ta_model_load(const char* path, ta_model** out) {
  TA_REQUIRE(path && out, "ta_model_load: NULL argument");
  return guard([&] { *out = new ta_model{tractaug::load_model(path)}; });
}

ta_status ta_model_save(const ta_model* m, const char* path) {
  TA_REQUIRE(m && path, "ta_model_save: NULL argument");
  return guard([&] { tractaug::save_model(m->m, path); });
}

ta_status ta_model_predict(const ta_model* m, const ta_volume* image, ta_labels** out) {
  TA_REQUIRE(m && image && out, "ta_model_predict: NULL argument");
  return guard([&] { *out = new ta_labels{tractaug::predict(m->m, image->v)}; });
}

void ta_model_free(ta_model* m) { delete m; }

ta_status ta_run_workflow(const char* name, const char* options_json, char** result_json) {
  TA_REQUIRE(name, "ta_run_workflow: NULL workflow name");
  return guard([&] {
    nlohmann::json options = nlohmann::json::object();
    if (options_json && *options_json) {
      try {
        options = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::parse_error& e) {
        tractaug::fail(tractaug::ErrorCode::Schema, std::string("options are not valid JSON: ") + e.what());
      }
    }
    const nlohmann::json result = tractaug::run_workflow(name, options);
    if (result_json) *result_json = copy_string(result.dump(2));
  });
}

}  // extern "C"
