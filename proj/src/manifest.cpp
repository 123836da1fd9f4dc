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

#include "tractaug/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "json.hpp"
#include "tractaug/error.hpp"
#include "tractaug/nifti_io.hpp"

namespace tractaug {

using nlohmann::json;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::RC1: return "RC1";
    case Strategy::RC2: return "RC2";
    case Strategy::TC1: return "TC1";
    case Strategy::TC2: return "TC2";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Strategy s : kAllStrategies)
    if (to_string(s) == up) return s;
  fail(ErrorCode::InvalidArgument, "unknown augmentation strategy '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void schema(const std::filesystem::path& path, const std::string& what) {
  fail(ErrorCode::Schema, "manifest '" + path.string() + "': " + what);
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::filesystem::path& path,
               const std::string& where) {
  if (!obj.is_object()) schema(path, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) schema(path, "unknown field '" + it.key() + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::filesystem::path& path, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(path, "missing field '" + std::string(key) + "' in " + where);
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::filesystem::path& path,
                           const std::string& where) {
  const json& v = require(obj, key, path, where);
  if (!v.is_string()) schema(path, "field '" + std::string(key) + "' in " + where + " must be a string");
  return v.get<std::string>();
}

std::uint64_t require_u64(const json& obj, const char* key, const std::filesystem::path& path,
                          const std::string& where) {
  const json& v = require(obj, key, path, where);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    schema(path, "field '" + std::string(key) + "' in " + where + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relativize(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.is_relative()) return p.generic_string();
  const auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

}  // namespace

void DatasetManifest::validate() const {
  const std::filesystem::path none("<memory>");
  if (format_version != kFormatVersion)
    schema(none, "unsupported format_version " + std::to_string(format_version));
  std::set<std::string> tract_set(tracts.begin(), tracts.end());
  if (tract_set.size() != tracts.size()) schema(none, "duplicate tract name in 'tracts'");
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.sample_id.empty()) schema(none, "empty sample_id");
    if (!ids.insert(e.sample_id).second) schema(none, "duplicate sample_id '" + e.sample_id + "'");
    if (e.image.empty()) schema(none, "entry '" + e.sample_id + "' has no image path");
    if (e.labels.size() != tracts.size())
      schema(none, "entry '" + e.sample_id + "' lists " + std::to_string(e.labels.size()) + " labels, expected " +
                       std::to_string(tracts.size()));
    for (std::size_t j = 0; j < tracts.size(); ++j) {
      if (e.labels[j].tract != tracts[j])
        schema(none, "entry '" + e.sample_id + "' label " + std::to_string(j) + " is '" + e.labels[j].tract +
                         "', expected '" + tracts[j] + "'");
      if (e.labels[j].path.empty())
        schema(none, "entry '" + e.sample_id + "' has an empty path for tract '" + tracts[j] + "'");
    }
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    schema(path, std::string("invalid JSON: ") + e.what());
  }
  const auto base = path.parent_path();
  only_keys(doc, {"format_version", "tracts", "entries"}, path, "manifest");
  DatasetManifest m;
  const json& version = require(doc, "format_version", path, "manifest");
  if (!version.is_number_integer()) schema(path, "format_version must be an integer");
  m.format_version = version.get<int>();
  if (m.format_version != DatasetManifest::kFormatVersion)
    schema(path, "unsupported format_version " + std::to_string(m.format_version));

  const json& tracts = require(doc, "tracts", path, "manifest");
  if (!tracts.is_array()) schema(path, "'tracts' must be an array");
  for (const auto& t : tracts) {
    if (!t.is_string()) schema(path, "'tracts' must hold strings");
    m.tracts.push_back(t.get<std::string>());
  }

  const json& entries = require(doc, "entries", path, "manifest");
  if (!entries.is_array()) schema(path, "'entries' must be an array");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    const std::string where = "entries[" + std::to_string(i) + "]";
    only_keys(e, {"sample_id", "image", "labels", "provenance"}, path, where);
    ManifestEntry entry;
    entry.sample_id = require_string(e, "sample_id", path, where);
    entry.image = resolve(base, require_string(e, "image", path, where));
    const json& labels = require(e, "labels", path, where);
    if (!labels.is_array()) schema(path, where + ".labels must be an array");
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::string lw = where + ".labels[" + std::to_string(j) + "]";
      only_keys(labels[j], {"tract", "path"}, path, lw);
      entry.labels.push_back(
          {require_string(labels[j], "tract", path, lw), resolve(base, require_string(labels[j], "path", path, lw))});
    }
    const json& prov = require(e, "provenance", path, where);
    const std::string pw = where + ".provenance";
    const std::string kind = require_string(prov, "kind", path, pw);
    if (kind == "real") {
      only_keys(prov, {"kind"}, path, pw);
      entry.provenance = Provenance::real();
    } else if (kind == "synthetic") {
      only_keys(prov, {"kind", "strategy", "seed", "sample_index"}, path, pw);
      Strategy s;
      try {
        s = parse_strategy(require_string(prov, "strategy", path, pw));
      } catch (const Error& err) {
        schema(path, pw + ": " + err.what());
      }
      entry.provenance =
          Provenance::synthetic(s, require_u64(prov, "seed", path, pw), require_u64(prov, "sample_index", path, pw));
    } else {
      schema(path, pw + ".kind must be \"real\" or \"synthetic\", got '" + kind + "'");
    }
    m.entries.push_back(std::move(entry));
  }
  try {
    m.validate();
  } catch (const Error& err) {
    schema(path, err.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  const auto base = path.parent_path();
  json doc;
  doc["format_version"] = manifest.format_version;
  doc["tracts"] = manifest.tracts;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    json entry;
    entry["sample_id"] = e.sample_id;
    entry["image"] = relativize(base, e.image);
    entry["labels"] = json::array();
    for (const auto& l : e.labels) entry["labels"].push_back({{"tract", l.tract}, {"path", relativize(base, l.path)}});
    if (e.provenance.kind == Provenance::Kind::Real) {
      entry["provenance"] = {{"kind", "real"}};
    } else {
      entry["provenance"] = {{"kind", "synthetic"},
                             {"strategy", to_string(e.provenance.strategy)},
                             {"seed", e.provenance.seed},
                             {"sample_index", e.provenance.sample_index}};
    }
    doc["entries"].push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
}

Volume3D load_image(const ManifestEntry& entry) { return nifti::read_volume(entry.image); }

TractLabelMap load_labels(const ManifestEntry& entry) {
  std::vector<std::string> names;
  std::vector<BinaryMask3D> masks;
  for (const auto& l : entry.labels) {
    names.push_back(l.tract);
    masks.push_back(nifti::read_mask(l.path));
  }
  return TractLabelMap(std::move(names), std::move(masks));
}

}  // namespace tractaug
