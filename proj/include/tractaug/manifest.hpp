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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tractaug/strategy.hpp"
#include "tractaug/volume.hpp"

namespace tractaug {

struct Provenance {
  enum class Kind { Real, Synthetic };
  Kind kind = Kind::Real;
  // Meaningful only for synthetic entries.
  Strategy strategy = Strategy::RC1;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;

  static Provenance real() { return {}; }
  static Provenance synthetic(Strategy s, std::uint64_t seed, std::uint64_t index) {
    return {Kind::Synthetic, s, seed, index};
  }
  bool operator==(const Provenance&) const = default;
};

struct LabelRef {
  std::string tract;
  std::filesystem::path path;
  bool operator==(const LabelRef&) const = default;
};

struct ManifestEntry {
  std::string sample_id;
  std::filesystem::path image;
  std::vector<LabelRef> labels;
  Provenance provenance;
  bool operator==(const ManifestEntry&) const = default;
};

/// JSON dataset manifest.
///
///   {
///     "format_version": 1,
///     "tracts": ["CST_left", ...],
///     "entries": [
///       {"sample_id": "s0", "image": "s0/image.nii.gz",
///        "labels": [{"tract": "CST_left", "path": "s0/labels/CST_left.nii.gz"}, ...],
///        "provenance": {"kind": "real"}
///                   | {"kind": "synthetic", "strategy": "RC1", "seed": 7, "sample_index": 0}}
///     ]
///   }
///
/// "tracts" lists the channel order every entry must follow. Relative paths
/// are resolved against the manifest's directory on read; paths under that
/// directory are written relative. Unknown keys are schema errors.
struct DatasetManifest {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  std::vector<std::string> tracts;
  std::vector<ManifestEntry> entries;

  // Throws Schema on duplicate ids, label sets that do not match `tracts`,
  // or empty paths.
  void validate() const;
  bool operator==(const DatasetManifest&) const = default;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

Volume3D load_image(const ManifestEntry& entry);
TractLabelMap load_labels(const ManifestEntry& entry);

}  // namespace tractaug
