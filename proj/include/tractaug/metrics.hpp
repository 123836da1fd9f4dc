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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tractaug/volume.hpp"

namespace tractaug {

// 2|a ∩ b| / (|a| + |b|); 1.0 when both masks are empty.
double dice(const BinaryMask3D& a, const BinaryMask3D& b);

// Dice per channel, predictions matched to truth by channel name.
std::vector<double> dice_per_tract(const TractLabelMap& prediction, const TractLabelMap& truth);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
};

/// Two-sided paired Student's t-test on the differences x_i - y_i.
///
/// With zero variance of the differences, t is +-infinity and p = 0 when
/// the mean difference is non-zero; t = 0 and p = 1 otherwise.
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a, b), continued fraction (Lentz).
double incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

struct DiceReport {
  std::vector<std::string> tracts;
  std::vector<std::string> subjects;
  // [tract][subject]
  std::vector<std::vector<double>> per_tract_per_subject;
  std::vector<double> per_tract_mean;
  double grand_mean = 0.0;

  // Mean over tracts for each subject (used for paired comparisons).
  std::vector<double> per_subject_mean() const;
};

struct DiceCell {
  std::string tract;
  std::string subject;
  double dice = 0.0;
};

// Every (tract, subject) pair must be present exactly once; missing or
// duplicated cells raise InvalidArgument listing them. Tract and subject
// order follow first appearance.
DiceReport aggregate(std::span<const DiceCell> cells);

}  // namespace tractaug
