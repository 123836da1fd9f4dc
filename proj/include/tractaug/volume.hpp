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
#include <span>
#include <string>
#include <vector>

namespace tractaug {

using Dims = std::array<std::int64_t, 3>;

/// Voxel grid description shared by every volume and mask.
///
/// Voxel (x, y, z) lives at linear index x + R_x * (y + R_y * z), i.e. x is
/// the fastest axis. The affine maps voxel indices to world millimetres and
/// is stored row-major; its last row is always (0, 0, 0, 1). Spacing and
/// affine are single precision so they survive a NIfTI round trip bit-exactly.
struct Geometry {
  Dims dims{1, 1, 1};
  std::array<float, 3> spacing{1.f, 1.f, 1.f};
  std::array<float, 16> affine{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  // Axis-aligned affine scaled by spacing.
  static Geometry make(Dims dims, std::array<float, 3> spacing = {1.f, 1.f, 1.f});

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }
  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z));
  }
  // Throws InvalidArgument when an invariant is broken.
  void validate() const;
  std::string describe() const;

  bool operator==(const Geometry&) const = default;
};

// Throws GeometryMismatch naming both shapes.
void require_same_geometry(const Geometry& a, const Geometry& b, const char* what);

class Volume3D {
 public:
  Volume3D() = default;
  // Zero-filled.
  explicit Volume3D(Geometry geometry);
  Volume3D(Geometry geometry, std::vector<float> data);

  const Geometry& geometry() const { return geometry_; }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[geometry_.index(x, y, z)];
  }
  std::size_t size() const { return data_.size(); }

  bool operator==(const Volume3D&) const = default;

 private:
  Geometry geometry_;
  std::vector<float> data_;
};

/// One byte per voxel, each 0 or 1.
class BinaryMask3D {
 public:
  BinaryMask3D() = default;
  explicit BinaryMask3D(Geometry geometry);
  BinaryMask3D(Geometry geometry, std::vector<std::uint8_t> bits);

  const Geometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> data() { return bits_; }
  bool at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return bits_[geometry_.index(x, y, z)] != 0;
  }
  void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }
  std::size_t size() const { return bits_.size(); }
  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }

  bool operator==(const BinaryMask3D&) const = default;

 private:
  Geometry geometry_;
  std::vector<std::uint8_t> bits_;
};

/// N named binary channels sharing one geometry.
class TractLabelMap {
 public:
  TractLabelMap() = default;
  TractLabelMap(std::vector<std::string> names, std::vector<BinaryMask3D> channels);

  const Geometry& geometry() const { return channels_.front().geometry(); }
  std::size_t channel_count() const { return channels_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t j) const { return names_[j]; }
  const BinaryMask3D& channel(std::size_t j) const { return channels_[j]; }
  BinaryMask3D& channel(std::size_t j) { return channels_[j]; }
  const std::vector<BinaryMask3D>& channels() const { return channels_; }
  // Index of a named channel; throws InvalidArgument if absent.
  std::size_t find(const std::string& name) const;

  bool operator==(const TractLabelMap&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<BinaryMask3D> channels_;
};

// X ⊙ (1 − M): zero where the mask is set, untouched elsewhere.
Volume3D apply_mask(const Volume3D& x, const BinaryMask3D& m);

// Voxelwise OR. Equal to ceil(mean) of the stacked binary masks.
BinaryMask3D mask_union(std::span<const BinaryMask3D> masks);

// 64-bit FNV-1a over the canonical serialization below.
std::uint64_t content_hash(const Volume3D& x);
std::uint64_t content_hash(const BinaryMask3D& m);
std::uint64_t content_hash(const TractLabelMap& y);
std::uint64_t content_hash(const Volume3D& x, const TractLabelMap& y);

// Canonical little-endian byte form: a type tag, dims as int64, spacing and
// affine as float32 bit patterns, then the voxels (float32 bits or one byte
// per mask voxel). Label maps add the channel count and length-prefixed names.
std::vector<std::uint8_t> canonical_bytes(const Volume3D& x);
std::vector<std::uint8_t> canonical_bytes(const BinaryMask3D& m);
std::vector<std::uint8_t> canonical_bytes(const TractLabelMap& y);

}  // namespace tractaug
