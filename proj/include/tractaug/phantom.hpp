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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tractaug/rng.hpp"
#include "tractaug/volume.hpp"

namespace tractaug {

/// Population-level description of a synthetic tract phantom.
///
/// `seed` fixes the population template (curve control points, radii,
/// intensities); each subject jitters the template with its own seed.
struct PhantomSpec {
  Dims dims{48, 48, 48};
  std::array<float, 3> spacing{1.25f, 1.25f, 1.25f};
  std::size_t n_existing_tracts = 6;
  std::size_t n_novel_tracts = 4;
  double radius_min = 1.5;  // voxels
  double radius_max = 3.0;
  std::size_t control_points = 4;
  double background = 0.2;
  double bump_min = 0.5;  // tract intensity above background
  double bump_max = 1.0;
  double noise_sigma = 0.05;
  double jitter = 1.5;  // voxels, per control-point coordinate
  // Probability that a novel tract is routed through a point of an existing one.
  double novel_overlap_probability = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_tracts() const { return n_existing_tracts + n_novel_tracts; }
};

struct PhantomSample {
  std::string subject_id;
  std::uint64_t subject_seed = 0;
  Volume3D image;
  TractLabelMap existing;
  TractLabelMap novel;
  // Intensity bump per tract, existing tracts first.
  std::vector<double> bumps;
};

// "EX01", "EX02", ...
std::vector<std::string> existing_tract_names(std::size_t n);
// CST_left, CST_right, OR_left, OR_right, POPT_left, ... then "NV13", ...
std::vector<std::string> novel_tract_names(std::size_t n);

PhantomSample generate_phantom(const PhantomSpec& spec, std::uint64_t subject_seed,
                               std::string subject_id = "sub-000");

struct PhantomSplits {
  std::vector<PhantomSample> pretrain;
  PhantomSample one_shot;
  std::vector<PhantomSample> test;
};

// Subject seeds are drawn from rng (distinct); subjects are generated in
// parallel. One-shot subject doubles as the validation subject.
PhantomSplits generate_splits(const PhantomSpec& spec, std::size_t n_pretrain, std::size_t n_test, Rng& rng);

}  // namespace tractaug
