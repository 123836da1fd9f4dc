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

#include "tractaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "tractaug/error.hpp"
#include "tractaug/log.hpp"

namespace tractaug {

double dice(const BinaryMask3D& a, const BinaryMask3D& b) {
  require_same_geometry(a.geometry(), b.geometry(), "dice");
  auto da = a.data(), db = b.data();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    na += da[i];
    nb += db[i];
    both += da[i] & db[i];
  }
  if (na + nb == 0) {
    log::info("dice: both masks empty, scoring 1.0");
    return 1.0;
  }
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<double> dice_per_tract(const TractLabelMap& prediction, const TractLabelMap& truth) {
  std::vector<double> out;
  out.reserve(truth.channel_count());
  for (std::size_t j = 0; j < truth.channel_count(); ++j)
    out.push_back(dice(prediction.channel(prediction.find(truth.name(j))), truth.channel(j)));
  return out;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidArgument, "incomplete_beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double dof) {
  if (!(dof > 0.0)) fail(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(ErrorCode::InvalidArgument, "paired_t_test: lengths differ (" + std::to_string(x.size()) + " vs " +
                                         std::to_string(y.size()) + ")");
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "paired_t_test needs at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (x[i] - y[i]) - mean;
    ss += d * d;
  }
  TTestResult r;
  r.dof = n - 1;
  const double var = ss / static_cast<double>(n - 1);
  if (var == 0.0) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided(r.t, static_cast<double>(r.dof));
  return r;
}

std::vector<double> DiceReport::per_subject_mean() const {
  std::vector<double> out(subjects.size(), 0.0);
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    for (std::size_t t = 0; t < tracts.size(); ++t) out[s] += per_tract_per_subject[t][s];
    out[s] /= static_cast<double>(tracts.size());
  }
  return out;
}

DiceReport aggregate(std::span<const DiceCell> cells) {
  if (cells.empty()) fail(ErrorCode::InvalidArgument, "aggregate: no Dice values");
  DiceReport r;
  auto index_of = [](std::vector<std::string>& list, const std::string& v) {
    auto it = std::find(list.begin(), list.end(), v);
    if (it != list.end()) return static_cast<std::size_t>(it - list.begin());
    list.push_back(v);
    return list.size() - 1;
  };
  for (const auto& c : cells) {
    if (!(c.dice >= 0.0 && c.dice <= 1.0))
      fail(ErrorCode::InvalidArgument, "aggregate: Dice for (" + c.tract + ", " + c.subject + ") is outside [0, 1]");
    index_of(r.tracts, c.tract);
    index_of(r.subjects, c.subject);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.per_tract_per_subject.assign(r.tracts.size(), std::vector<double>(r.subjects.size(), nan));
  std::vector<std::string> duplicates;
  for (const auto& c : cells) {
    double& slot = r.per_tract_per_subject[index_of(r.tracts, c.tract)][index_of(r.subjects, c.subject)];
    if (!std::isnan(slot)) duplicates.push_back("(" + c.tract + ", " + c.subject + ")");
    slot = c.dice;
  }
  std::vector<std::string> missing;
  for (std::size_t t = 0; t < r.tracts.size(); ++t)
    for (std::size_t s = 0; s < r.subjects.size(); ++s)
      if (std::isnan(r.per_tract_per_subject[t][s])) missing.push_back("(" + r.tracts[t] + ", " + r.subjects[s] + ")");
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
  };
  if (!duplicates.empty()) fail(ErrorCode::InvalidArgument, "aggregate: duplicated cells " + join(duplicates));
  if (!missing.empty()) fail(ErrorCode::InvalidArgument, "aggregate: missing cells " + join(missing));

  r.per_tract_mean.resize(r.tracts.size());
  for (std::size_t t = 0; t < r.tracts.size(); ++t) {
    const auto& row = r.per_tract_per_subject[t];
    r.per_tract_mean[t] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  }
  r.grand_mean = std::accumulate(r.per_tract_mean.begin(), r.per_tract_mean.end(), 0.0) /
                 static_cast<double>(r.per_tract_mean.size());
  return r;
}

}  // namespace tractaug
