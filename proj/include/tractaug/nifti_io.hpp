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

#include <filesystem>
#include <string>
#include <vector>

#include "tractaug/volume.hpp"

namespace tractaug::nifti {

// NIfTI-1 datatype codes accepted on read.
enum class Datatype : short {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
};

/// Reads a single-file NIfTI-1 image (.nii, or gzip-compressed .nii.gz).
///
/// Voxels are converted to float32 with scl_slope/scl_inter applied when
/// slope is non-zero. The affine comes from the sform when sform_code > 0,
/// otherwise from the qform when qform_code > 0, otherwise from pixdim.
/// Byte-swapped headers are accepted. Failures raise BadMagic,
/// UnsupportedDatatype, NotThreeD, Truncated or Io.
Volume3D read_volume(const std::filesystem::path& path);

// Reads a NIfTI image and binarizes it (value > 0.5 is foreground).
BinaryMask3D read_mask(const std::filesystem::path& path);

// float32 volume / uint8 {0,1} mask, little endian, sform_code 1, qform_code 0.
// Compressed when the path ends in ".gz". Output bytes depend only on the input.
void write_volume(const Volume3D& x, const std::filesystem::path& path);
void write_mask(const BinaryMask3D& m, const std::filesystem::path& path);

// Serialized file contents, before optional gzip. Exposed for tests.
std::vector<unsigned char> encode(const Volume3D& x);
std::vector<unsigned char> encode(const BinaryMask3D& m);

}  // namespace tractaug::nifti
