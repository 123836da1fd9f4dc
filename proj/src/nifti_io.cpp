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

#include "tractaug/nifti_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tractaug/error.hpp"

namespace tractaug::nifti {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

// Byte offsets of the NIfTI-1 header fields used here.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int dim = 40;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int quatern_b = 256;
constexpr int srow_x = 280;
constexpr int magic = 344;
}  // namespace off

class HeaderView {
 public:
  HeaderView(const unsigned char* bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(int offset) const {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_ + offset, sizeof(T));
    if (swap_) std::reverse(raw, raw + sizeof(T));
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  short i16(int offset) const { return get<short>(offset); }
  int i32(int offset) const { return get<int>(offset); }
  float f32(int offset) const { return get<float>(offset); }

 private:
  const unsigned char* bytes_;
  bool swap_;
};

class HeaderWriter {
 public:
  HeaderWriter() : bytes_(kVoxOffset, 0) {}
  template <typename T>
  void put(int offset, T v) {
    static_assert(std::endian::native == std::endian::little, "writer assumes little endian host");
    std::memcpy(bytes_.data() + offset, &v, sizeof(T));
  }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(f, buf, sizeof buf);
    if (n < 0) {
      int errnum = 0;
      std::string msg = gzerror(f, &errnum);
      gzclose(f);
      fail(ErrorCode::Truncated, "'" + path.string() + "': corrupt or truncated stream (" + msg + ")");
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  gzclose(f);
  return out;
}

bool ends_with_gz(const std::filesystem::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

void write_all(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (ends_with_gz(path)) {
    // zlib's gzip header carries mtime 0, so the output is byte-deterministic.
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (!f) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - pos, 1u << 20));
      if (gzwrite(f, bytes.data() + pos, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
      }
      pos += chunk;
    }
    if (gzclose(f) != Z_OK) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::array<float, 16> quaternion_affine(const HeaderView& h, const std::array<float, 3>& pix, float qfac) {
  double b = h.f32(off::quatern_b), c = h.f32(off::quatern_b + 4), d = h.f32(off::quatern_b + 8);
  const double qx = h.f32(off::quatern_b + 12), qy = h.f32(off::quatern_b + 16),
               qz = h.f32(off::quatern_b + 20);
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double xd = pix[0], yd = pix[1], zd = qfac < 0 ? -pix[2] : pix[2];
  const double r[9] = {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
                       2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
                       2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b};
  return {static_cast<float>(r[0] * xd), static_cast<float>(r[1] * yd), static_cast<float>(r[2] * zd),
          static_cast<float>(qx),        static_cast<float>(r[3] * xd), static_cast<float>(r[4] * yd),
          static_cast<float>(r[5] * zd), static_cast<float>(qy),        static_cast<float>(r[6] * xd),
          static_cast<float>(r[7] * yd), static_cast<float>(r[8] * zd), static_cast<float>(qz),
          0.f, 0.f, 0.f, 1.f};
}

template <typename T>
void convert(const unsigned char* src, std::size_t n, bool swap, float slope, float inter, std::vector<float>& dst) {
  dst.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, src + i * sizeof(T), sizeof(T));
    if (swap) std::reverse(raw, raw + sizeof(T));
    T v;
    std::memcpy(&v, raw, sizeof(T));
    double value = static_cast<double>(v);
    if (slope != 0.f) value = value * slope + inter;
    dst[i] = static_cast<float>(value);
  }
}

std::vector<unsigned char> encode_header(const Geometry& g, Datatype type, short bitpix) {
  HeaderWriter w;
  w.put<int>(off::sizeof_hdr, kHeaderSize);
  const short dim[8] = {3, static_cast<short>(g.dims[0]), static_cast<short>(g.dims[1]),
                        static_cast<short>(g.dims[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) w.put<short>(off::dim + 2 * i, dim[i]);
  w.put<short>(off::datatype, static_cast<short>(type));
  w.put<short>(off::bitpix, bitpix);
  const float pixdim[8] = {1.f, g.spacing[0], g.spacing[1], g.spacing[2], 0.f, 0.f, 0.f, 0.f};
  for (int i = 0; i < 8; ++i) w.put<float>(off::pixdim + 4 * i, pixdim[i]);
  w.put<float>(off::vox_offset, static_cast<float>(kVoxOffset));
  w.put<float>(off::scl_slope, 1.f);
  w.put<float>(off::scl_inter, 0.f);
  w.put<char>(off::xyzt_units, 2);  // millimetres
  w.put<short>(off::qform_code, 0);
  w.put<short>(off::sform_code, 1);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) w.put<float>(off::srow_x + 16 * r + 4 * c, g.affine[4 * r + c]);
  w.put<char>(off::magic, 'n');
  w.put<char>(off::magic + 1, '+');
  w.put<char>(off::magic + 2, '1');
  return w.take();
}

void check_dims_fit(const Geometry& g) {
  for (auto d : g.dims)
    if (d > 32767) fail(ErrorCode::InvalidArgument, "NIfTI-1 cannot store dimension " + std::to_string(d));
}

}  // namespace

Volume3D read_volume(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "no such file '" + path.string() + "'");
  const auto bytes = read_all(path);
  if (bytes.size() < kHeaderSize)
    fail(ErrorCode::Truncated, "'" + path.string() + "': file shorter than the 348-byte header");

  int sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    swap = true;
    if (HeaderView(bytes.data(), true).i32(off::sizeof_hdr) != kHeaderSize)
      fail(ErrorCode::BadMagic, "'" + path.string() + "': sizeof_hdr is not 348");
  }
  if (std::memcmp(bytes.data() + off::magic, "n+1\0", 4) != 0)
    fail(ErrorCode::BadMagic, "'" + path.string() + "': magic is not \"n+1\" (single-file NIfTI-1)");

  const HeaderView h(bytes.data(), swap);
  const short ndim = h.i16(off::dim);
  if (ndim < 1 || ndim > 7) fail(ErrorCode::BadMagic, "'" + path.string() + "': invalid dim[0]");
  short dims[8];
  for (int i = 0; i < 8; ++i) dims[i] = h.i16(off::dim + 2 * i);
  bool three_d = ndim >= 3;
  for (int i = 4; i <= ndim; ++i)
    if (dims[i] > 1) three_d = false;
  if (!three_d)
    fail(ErrorCode::NotThreeD, "'" + path.string() + "': image has dim[0]=" + std::to_string(ndim) +
                                   ", expected a single 3D volume");
  for (int i = 1; i <= 3; ++i)
    if (dims[i] < 1) fail(ErrorCode::NotThreeD, "'" + path.string() + "': non-positive dimension");

  const short code = h.i16(off::datatype);
  std::size_t width = 0;
  switch (static_cast<Datatype>(code)) {
    case Datatype::UInt8: width = 1; break;
    case Datatype::Int16: width = 2; break;
    case Datatype::Int32: width = 4; break;
    case Datatype::Float32: width = 4; break;
    case Datatype::Float64: width = 8; break;
    default:
      fail(ErrorCode::UnsupportedDatatype,
           "'" + path.string() + "': unsupported datatype code " + std::to_string(code));
  }

  Geometry g;
  g.dims = {dims[1], dims[2], dims[3]};
  for (int i = 0; i < 3; ++i) {
    const float p = std::fabs(h.f32(off::pixdim + 4 * (i + 1)));
    g.spacing[i] = (p > 0.f && std::isfinite(p)) ? p : 1.f;
  }
  const short sform = h.i16(off::sform_code);
  const short qform = h.i16(off::qform_code);
  if (sform > 0) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) g.affine[4 * r + c] = h.f32(off::srow_x + 16 * r + 4 * c);
    g.affine[12] = g.affine[13] = g.affine[14] = 0.f;
    g.affine[15] = 1.f;
  } else if (qform > 0) {
    const float qfac = h.f32(off::pixdim);
    g.affine = quaternion_affine(h, g.spacing, qfac);
  } else {
    g.affine = {g.spacing[0], 0, 0, 0, 0, g.spacing[1], 0, 0, 0, 0, g.spacing[2], 0, 0, 0, 0, 1};
  }
  g.validate();

  const float vox = h.f32(off::vox_offset);
  const std::size_t offset = vox < kHeaderSize ? kVoxOffset : static_cast<std::size_t>(vox);
  const std::size_t n = g.voxel_count();
  if (bytes.size() < offset + n * width)
    fail(ErrorCode::Truncated, "'" + path.string() + "': expected " + std::to_string(n * width) +
                                   " data bytes, file holds " +
                                   std::to_string(bytes.size() > offset ? bytes.size() - offset : 0));

  float slope = h.f32(off::scl_slope), inter = h.f32(off::scl_inter);
  if (!std::isfinite(slope)) slope = 0.f;
  if (!std::isfinite(inter)) inter = 0.f;
  std::vector<float> data;
  const unsigned char* src = bytes.data() + offset;
  switch (static_cast<Datatype>(code)) {
    case Datatype::UInt8: convert<std::uint8_t>(src, n, swap, slope, inter, data); break;
    case Datatype::Int16: convert<std::int16_t>(src, n, swap, slope, inter, data); break;
    case Datatype::Int32: convert<std::int32_t>(src, n, swap, slope, inter, data); break;
    case Datatype::Float32: convert<float>(src, n, swap, slope, inter, data); break;
    case Datatype::Float64: convert<double>(src, n, swap, slope, inter, data); break;
  }
  return Volume3D(g, std::move(data));
}

BinaryMask3D read_mask(const std::filesystem::path& path) {
  const Volume3D v = read_volume(path);
  std::vector<std::uint8_t> bits(v.size());
  auto src = v.data();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = src[i] > 0.5f ? 1 : 0;
  return BinaryMask3D(v.geometry(), std::move(bits));
}

std::vector<unsigned char> encode(const Volume3D& x) {
  check_dims_fit(x.geometry());
  auto bytes = encode_header(x.geometry(), Datatype::Float32, 32);
  const auto data = x.data();
  const std::size_t start = bytes.size();
  bytes.resize(start + 4 * data.size());
  std::memcpy(bytes.data() + start, data.data(), 4 * data.size());
  return bytes;
}

std::vector<unsigned char> encode(const BinaryMask3D& m) {
  check_dims_fit(m.geometry());
  auto bytes = encode_header(m.geometry(), Datatype::UInt8, 8);
  const auto data = m.data();
  bytes.insert(bytes.end(), data.begin(), data.end());
  return bytes;
}

void write_volume(const Volume3D& x, const std::filesystem::path& path) { write_all(encode(x), path); }
void write_mask(const BinaryMask3D& m, const std::filesystem::path& path) { write_all(encode(m), path); }

}  // namespace tractaug::nifti
