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

#include "tractaug/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "tractaug/error.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

namespace {

using Point = std::array<double, 3>;

struct TractTemplate {
  std::vector<Point> control;
  double radius = 1.0;
  double bump = 1.0;
};

constexpr std::uint64_t kTemplateStream = 0x7465;  // "te"
constexpr std::uint64_t kSubjectStream = 0x7375;   // "su"

double margin(const PhantomSpec& spec) { return spec.radius_max * 1.1 + 1.0; }

Point clamp_point(const Point& p, const PhantomSpec& spec) {
  const double m = margin(spec);
  Point out;
  for (int i = 0; i < 3; ++i) out[i] = std::clamp(p[i], m, static_cast<double>(spec.dims[i] - 1) - m);
  return out;
}

// Bernstein-form Bezier; stays inside the hull of its control points.
Point bezier(const std::vector<Point>& ctrl, double t) {
  std::vector<Point> pts = ctrl;
  for (std::size_t level = pts.size() - 1; level > 0; --level)
    for (std::size_t i = 0; i < level; ++i)
      for (int a = 0; a < 3; ++a) pts[i][a] = (1.0 - t) * pts[i][a] + t * pts[i + 1][a];
  return pts[0];
}

std::vector<TractTemplate> make_templates(const PhantomSpec& spec) {
  Rng rng(mix_seed(spec.seed, kTemplateStream));
  const std::size_t total = spec.total_tracts();
  const double m = margin(spec);
  auto inner = [&](int axis) { return rng.uniform(m, static_cast<double>(spec.dims[axis] - 1) - m); };

  // Distinct, evenly spread intensities in random order.
  std::vector<std::size_t> rank(total);
  std::iota(rank.begin(), rank.end(), 0);
  for (std::size_t i = total; i > 1; --i) std::swap(rank[i - 1], rank[rng.below(i)]);

  std::vector<TractTemplate> out(total);
  for (std::size_t t = 0; t < total; ++t) {
    TractTemplate& tpl = out[t];
    // Endpoints near opposite faces along a random main axis.
    const int axis = static_cast<int>(rng.below(3));
    const double hi = static_cast<double>(spec.dims[axis] - 1) - m;
    tpl.control.resize(spec.control_points);
    for (std::size_t c = 0; c < spec.control_points; ++c) {
      Point p{inner(0), inner(1), inner(2)};
      if (c == 0) p[axis] = m + rng.uniform(0.0, 2.0);
      if (c + 1 == spec.control_points) p[axis] = hi - rng.uniform(0.0, 2.0);
      tpl.control[c] = clamp_point(p, spec);
    }
    tpl.radius = rng.uniform(spec.radius_min, spec.radius_max);
    tpl.bump = total == 1 ? spec.bump_max
                          : spec.bump_min + (spec.bump_max - spec.bump_min) * static_cast<double>(rank[t]) /
                                                static_cast<double>(total - 1);
  }
  // Route some novel tracts through a point on an existing tract.
  for (std::size_t t = spec.n_existing_tracts; t < total; ++t) {
    if (!rng.bernoulli(spec.novel_overlap_probability) || spec.control_points < 3) continue;
    const auto& host = out[rng.below(spec.n_existing_tracts)];
    const Point on_host = bezier(host.control, rng.uniform(0.3, 0.7));
    const std::size_t slot = 1 + rng.below(spec.control_points - 2);
    out[t].control[slot] = clamp_point(on_host, spec);
  }
  return out;
}

void stamp_tube(const std::vector<Point>& ctrl, double radius, BinaryMask3D& mask) {
  const Geometry& g = mask.geometry();
  double length = 0.0;
  for (std::size_t i = 1; i < ctrl.size(); ++i) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) d2 += (ctrl[i][a] - ctrl[i - 1][a]) * (ctrl[i][a] - ctrl[i - 1][a]);
    length += std::sqrt(d2);
  }
  const std::size_t samples = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(length * 4.0)));
  const double r2 = radius * radius;
  const auto reach = static_cast<std::int64_t>(std::ceil(radius));
  auto bits = mask.data();
  for (std::size_t s = 0; s <= samples; ++s) {
    const Point c = bezier(ctrl, static_cast<double>(s) / static_cast<double>(samples));
    const std::int64_t cx = std::llround(c[0]), cy = std::llround(c[1]), cz = std::llround(c[2]);
    for (std::int64_t z = std::max<std::int64_t>(0, cz - reach - 1); z <= std::min(g.dims[2] - 1, cz + reach + 1); ++z)
      for (std::int64_t y = std::max<std::int64_t>(0, cy - reach - 1); y <= std::min(g.dims[1] - 1, cy + reach + 1); ++y)
        for (std::int64_t x = std::max<std::int64_t>(0, cx - reach - 1); x <= std::min(g.dims[0] - 1, cx + reach + 1);
             ++x) {
          const double dx = x - c[0], dy = y - c[1], dz = z - c[2];
          if (dx * dx + dy * dy + dz * dz <= r2) bits[g.index(x, y, z)] = 1;
        }
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (n_existing_tracts < 1 || n_novel_tracts < 1)
    fail(ErrorCode::InvalidArgument, "phantom needs at least one existing and one novel tract");
  if (!(radius_min >= 1.0) || !(radius_max >= radius_min))
    fail(ErrorCode::InvalidArgument, "phantom tube radius must satisfy 1 <= radius_min <= radius_max");
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "phantom noise sigma must be >= 0");
  if (!(jitter >= 0.0)) fail(ErrorCode::InvalidArgument, "phantom jitter must be >= 0");
  if (control_points < 2) fail(ErrorCode::InvalidArgument, "phantom curves need at least 2 control points");
  if (!(bump_min > 0.0) || !(bump_max >= bump_min))
    fail(ErrorCode::InvalidArgument, "phantom intensity bumps must satisfy 0 < bump_min <= bump_max");
  if (!(novel_overlap_probability >= 0.0 && novel_overlap_probability <= 1.0))
    fail(ErrorCode::InvalidArgument, "novel_overlap_probability must lie in [0, 1]");
  Geometry::make(dims, spacing);
  for (int i = 0; i < 3; ++i)
    if (static_cast<double>(dims[i] - 1) - 2.0 * margin(*this) < 0.0)
      fail(ErrorCode::InvalidArgument, "phantom tubes of radius " + std::to_string(radius_max) +
                                           " cannot fit inside a volume of " + std::to_string(dims[i]) +
                                           " voxels along axis " + std::to_string(i));
}

std::vector<std::string> existing_tract_names(std::size_t n) {
  std::vector<std::string> out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "EX%02zu", i + 1);
    out.emplace_back(buf);
  }
  return out;
}

std::vector<std::string> novel_tract_names(std::size_t n) {
  static const char* kNames[] = {"CST_left",   "CST_right", "OR_left",  "OR_right", "POPT_left", "POPT_right",
                                 "FPT_left",   "FPT_right", "ILF_left", "ILF_right", "UF_left",  "UF_right"};
  std::vector<std::string> out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    if (i < std::size(kNames)) {
      out.emplace_back(kNames[i]);
    } else {
      std::snprintf(buf, sizeof buf, "NV%02zu", i + 1);
      out.emplace_back(buf);
    }
  }
  return out;
}

PhantomSample generate_phantom(const PhantomSpec& spec, std::uint64_t subject_seed, std::string subject_id) {
  spec.validate();
  const auto templates = make_templates(spec);
  const Geometry g = Geometry::make(spec.dims, spec.spacing);
  Rng rng(mix_seed(spec.seed, kSubjectStream, subject_seed));

  std::vector<BinaryMask3D> masks;
  PhantomSample sample;
  sample.subject_id = std::move(subject_id);
  sample.subject_seed = subject_seed;
  for (const auto& tpl : templates) {
    std::vector<Point> ctrl = tpl.control;
    for (auto& p : ctrl) {
      for (int a = 0; a < 3; ++a) p[a] += spec.jitter * rng.normal();
      p = clamp_point(p, spec);
    }
    const double radius = std::clamp(tpl.radius * rng.uniform(0.9, 1.1), spec.radius_min, spec.radius_max);
    BinaryMask3D mask(g);
    stamp_tube(ctrl, radius, mask);
    if (mask.count() == 0) fail(ErrorCode::InvalidArgument, "phantom tract left the volume entirely");
    masks.push_back(std::move(mask));
    sample.bumps.push_back(tpl.bump);
  }

  std::vector<float> data(g.voxel_count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double v = spec.background;
    for (std::size_t t = 0; t < masks.size(); ++t)
      if (masks[t].data()[i]) v += sample.bumps[t];
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
    data[i] = static_cast<float>(v);
  }
  sample.image = Volume3D(g, std::move(data));

  std::vector<BinaryMask3D> existing(masks.begin(), masks.begin() + spec.n_existing_tracts);
  std::vector<BinaryMask3D> novel(masks.begin() + spec.n_existing_tracts, masks.end());
  sample.existing = TractLabelMap(existing_tract_names(spec.n_existing_tracts), std::move(existing));
  sample.novel = TractLabelMap(novel_tract_names(spec.n_novel_tracts), std::move(novel));
  return sample;
}

PhantomSplits generate_splits(const PhantomSpec& spec, std::size_t n_pretrain, std::size_t n_test, Rng& rng) {
  if (n_pretrain < 1 || n_test < 1) fail(ErrorCode::InvalidArgument, "splits need n_pretrain >= 1 and n_test >= 1");
  spec.validate();
  const std::size_t total = n_pretrain + 1 + n_test;
  std::vector<std::uint64_t> seeds;
  std::set<std::uint64_t> used;
  while (seeds.size() < total) {
    const std::uint64_t s = rng.next();
    if (used.insert(s).second) seeds.push_back(s);
  }
  std::vector<PhantomSample> subjects(total);
  parallel_for(total, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "sub-%03zu", i);
    subjects[i] = generate_phantom(spec, seeds[i], id);
  });
  PhantomSplits out;
  out.pretrain.assign(std::make_move_iterator(subjects.begin()),
                      std::make_move_iterator(subjects.begin() + n_pretrain));
  out.one_shot = std::move(subjects[n_pretrain]);
  out.test.assign(std::make_move_iterator(subjects.begin() + n_pretrain + 1), std::make_move_iterator(subjects.end()));
  return out;
}

}  // namespace tractaug
