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

#include "tractaug/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

#include "tractaug/error.hpp"

namespace tractaug {

Geometry Geometry::make(Dims dims, std::array<float, 3> spacing) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.affine = {spacing[0], 0, 0, 0, 0, spacing[1], 0, 0, 0, 0, spacing[2], 0, 0, 0, 0, 1};
  g.validate();
  return g;
}

void Geometry::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) fail(ErrorCode::InvalidArgument, "dims must be >= 1 on every axis, got " + describe());
    if (!(spacing[i] > 0.f) || !std::isfinite(spacing[i]))
      fail(ErrorCode::InvalidArgument, "spacing must be positive and finite, got " + describe());
  }
  for (float a : affine)
    if (!std::isfinite(a)) fail(ErrorCode::InvalidArgument, "affine has non-finite entries");
  if (affine[12] != 0.f || affine[13] != 0.f || affine[14] != 0.f || affine[15] != 1.f)
    fail(ErrorCode::InvalidArgument, "affine last row must be (0, 0, 0, 1)");
  const double a = affine[0], b = affine[1], c = affine[2];
  const double d = affine[4], e = affine[5], f = affine[6];
  const double g = affine[8], h = affine[9], k = affine[10];
  const double det = a * (e * k - f * h) - b * (d * k - f * g) + c * (d * h - e * g);
  if (det == 0.0 || !std::isfinite(det))
    fail(ErrorCode::InvalidArgument, "affine rotation/scale block is singular");
}

std::string Geometry::describe() const {
  std::ostringstream os;
  os << dims[0] << "x" << dims[1] << "x" << dims[2] << " @ (" << spacing[0] << ", " << spacing[1]
     << ", " << spacing[2] << ") mm";
  return os.str();
}

void require_same_geometry(const Geometry& a, const Geometry& b, const char* what) {
  if (a == b) return;
  fail(ErrorCode::GeometryMismatch,
       std::string(what) + ": geometry mismatch between " + a.describe() + " and " + b.describe() +
           (a.dims == b.dims ? " (affines differ)" : ""));
}

Volume3D::Volume3D(Geometry geometry) : geometry_(geometry) {
  geometry_.validate();
  data_.assign(geometry_.voxel_count(), 0.f);
}

Volume3D::Volume3D(Geometry geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.voxel_count())
    fail(ErrorCode::InvalidArgument, "volume data length " + std::to_string(data_.size()) +
                                         " does not match " + geometry_.describe());
  for (float v : data_)
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "volume contains non-finite values");
}

BinaryMask3D::BinaryMask3D(Geometry geometry) : geometry_(geometry) {
  geometry_.validate();
  bits_.assign(geometry_.voxel_count(), 0);
}

BinaryMask3D::BinaryMask3D(Geometry geometry, std::vector<std::uint8_t> bits)
    : geometry_(geometry), bits_(std::move(bits)) {
  geometry_.validate();
  if (bits_.size() != geometry_.voxel_count())
    fail(ErrorCode::InvalidArgument, "mask data length " + std::to_string(bits_.size()) +
                                         " does not match " + geometry_.describe());
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask3D::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

TractLabelMap::TractLabelMap(std::vector<std::string> names, std::vector<BinaryMask3D> channels)
    : names_(std::move(names)), channels_(std::move(channels)) {
  if (channels_.empty()) fail(ErrorCode::InvalidArgument, "label map needs at least one channel");
  if (names_.size() != channels_.size())
    fail(ErrorCode::InvalidArgument, "label map has " + std::to_string(names_.size()) + " names for " +
                                         std::to_string(channels_.size()) + " channels");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) fail(ErrorCode::InvalidArgument, "tract names must be non-empty");
    if (!seen.insert(n).second) fail(ErrorCode::InvalidArgument, "duplicate tract name '" + n + "'");
  }
  for (std::size_t j = 1; j < channels_.size(); ++j)
    require_same_geometry(channels_[0].geometry(), channels_[j].geometry(), "label map channels");
}

std::size_t TractLabelMap::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) fail(ErrorCode::InvalidArgument, "no tract named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

Volume3D apply_mask(const Volume3D& x, const BinaryMask3D& m) {
  require_same_geometry(x.geometry(), m.geometry(), "apply_mask");
  Volume3D out = x;
  auto dst = out.data();
  auto bits = m.data();
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (bits[i]) dst[i] = 0.f;
  return out;
}

BinaryMask3D mask_union(std::span<const BinaryMask3D> masks) {
  if (masks.empty()) fail(ErrorCode::InvalidArgument, "mask_union needs at least one mask");
  BinaryMask3D out = masks.front();
  auto dst = out.data();
  for (std::size_t k = 1; k < masks.size(); ++k) {
    require_same_geometry(out.geometry(), masks[k].geometry(), "mask_union");
    auto src = masks[k].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
  }
  return out;
}

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void geometry(const Geometry& g) {
    for (auto d : g.dims) u64(static_cast<std::uint64_t>(d));
    for (auto s : g.spacing) f32(s);
    for (auto a : g.affine) f32(a);
  }
  void mask(const BinaryMask3D& m) {
    auto d = m.data();
    bytes.insert(bytes.end(), d.begin(), d.end());
  }
  std::vector<std::uint8_t> bytes;
};

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = kFnvOffset) {
  for (auto b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> canonical_bytes(const Volume3D& x) {
  ByteWriter w;
  w.u8('V');
  w.geometry(x.geometry());
  w.bytes.reserve(w.bytes.size() + 4 * x.size());
  for (float v : x.data()) w.f32(v);
  return std::move(w.bytes);
}

std::vector<std::uint8_t> canonical_bytes(const BinaryMask3D& m) {
  ByteWriter w;
  w.u8('M');
  w.geometry(m.geometry());
  w.mask(m);
  return std::move(w.bytes);
}

std::vector<std::uint8_t> canonical_bytes(const TractLabelMap& y) {
  ByteWriter w;
  w.u8('L');
  w.geometry(y.geometry());
  w.u64(y.channel_count());
  for (std::size_t j = 0; j < y.channel_count(); ++j) {
    w.u64(y.name(j).size());
    w.bytes.insert(w.bytes.end(), y.name(j).begin(), y.name(j).end());
    w.mask(y.channel(j));
  }
  return std::move(w.bytes);
}

std::uint64_t content_hash(const Volume3D& x) { return fnv1a(canonical_bytes(x)); }
std::uint64_t content_hash(const BinaryMask3D& m) { return fnv1a(canonical_bytes(m)); }
std::uint64_t content_hash(const TractLabelMap& y) { return fnv1a(canonical_bytes(y)); }

std::uint64_t content_hash(const Volume3D& x, const TractLabelMap& y) {
  return fnv1a(canonical_bytes(y), fnv1a(canonical_bytes(x)));
}

}  // namespace tractaug
