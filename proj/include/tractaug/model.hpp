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
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tractaug/rng.hpp"
#include "tractaug/volume.hpp"

namespace tractaug {

// ---------------------------------------------------------------------------
// Per-voxel features
// ---------------------------------------------------------------------------

enum Feature : std::size_t {
  kIntensity = 0,
  kLocalMean,
  kLocalStd,
  kGradientMagnitude,
  kCoordX,
  kCoordY,
  kCoordZ,
  kFeatureCount
};

const char* feature_name(std::size_t f);

/// Row-major [voxel][feature] array.
///
/// Local mean/std use the 3x3x3 neighbourhood and the gradient uses central
/// differences; both clamp indices at the volume edge. Coordinates are
/// normalized to [0, 1] per axis (0 on a single-voxel axis).
struct FeatureArray {
  std::size_t voxels = 0;
  std::vector<double> values;

  const double* row(std::size_t v) const { return values.data() + v * kFeatureCount; }
};

FeatureArray extract_features(const Volume3D& x);
FeatureArray extract_features_at(const Volume3D& x, std::span<const std::size_t> voxels);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// One hidden ReLU layer (the shared feature-extraction part) followed by a
/// per-task linear head with sigmoid outputs.
///
/// Parameters live in one flat vector:
///   [ W1 (F x H, row per feature) | b1 (H) | W2 (H x T, row per hidden unit) | b2 (T) ]
/// The first feature_param_count() entries are the feature layer; the rest
/// is the head. Inputs are standardized with a frozen per-feature shift and
/// scale before the first layer.
struct SegmenterModel {
  std::size_t feature_count = kFeatureCount;
  std::size_t hidden = 16;
  std::vector<std::string> tract_names;
  std::vector<double> input_shift;
  std::vector<double> input_scale;
  std::vector<double> params;

  std::size_t tracts() const { return tract_names.size(); }
  std::size_t feature_param_count() const { return feature_count * hidden + hidden; }
  std::size_t head_param_count() const { return hidden * tracts() + tracts(); }

  std::span<const double> feature_params() const { return {params.data(), feature_param_count()}; }
  std::span<const double> head_params() const {
    return {params.data() + feature_param_count(), head_param_count()};
  }

  // Glorot-uniform weights, zero biases, identity normalization.
  static SegmenterModel create(std::size_t hidden, std::vector<std::string> tract_names, std::uint64_t seed);

  // Copy with this model's feature layer and normalization and a freshly
  // initialized head for `tract_names`. Head weights ~ U(-a, a) with
  // a = sqrt(6 / (H + T)); head biases zero.
  SegmenterModel with_new_head(std::vector<std::string> tract_names, std::uint64_t seed) const;

  void validate() const;
  bool operator==(const SegmenterModel&) const = default;
};

// Sets input_shift/scale to the mean and standard deviation of `features`.
void fit_normalization(SegmenterModel& model, const FeatureArray& features);

// Probabilities, row-major [voxel][tract], each in (0, 1).
std::vector<double> forward(const SegmenterModel& model, const FeatureArray& features);

enum class Trainable { All, HeadOnly };

// Mean binary cross-entropy over voxels and tracts, computed from logits.
// `labels` is row-major [voxel][tract] with 0/1 entries. When `grad` is
// non-empty it receives dL/dparams (zero for frozen parameters).
double loss_and_gradient(const SegmenterModel& model, std::span<const double> features,
                         std::span<const std::uint8_t> labels, std::size_t voxels, Trainable trainable,
                         std::span<double> grad);

// Labels at probability >= 0.5, channels named after the model's tracts.
TractLabelMap predict(const SegmenterModel& model, const Volume3D& x);
// Same, from features already extracted from a volume of `geometry`.
TractLabelMap predict(const SegmenterModel& model, const FeatureArray& features, const Geometry& geometry);

void save_model(const SegmenterModel& model, const std::filesystem::path& path);
SegmenterModel load_model(const std::filesystem::path& path);
std::string model_to_json(const SegmenterModel& model);
SegmenterModel model_from_json(const std::string& text, const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Adamax (infinity-norm Adam):
///   m <- b1 m + (1 - b1) g
///   u <- max(b2 u, |g|)
///   theta <- theta - lr / (1 - b1^t) * m / (u + eps)
class Adamax {
 public:
  Adamax(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  // Updates params[begin, end) only; moments of other entries are untouched.
  void step(std::span<double> params, std::span<const double> grad, double learning_rate, std::size_t begin,
            std::size_t end);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  double beta1_power_ = 1.0;
  std::vector<double> m_, u_;
};

// ---------------------------------------------------------------------------
// Online transforms and training
// ---------------------------------------------------------------------------

struct TransformConfig {
  double scale_range = 0.1;   // intensity gain ~ U(1 - r, 1 + r)
  double shift_range = 0.05;  // intensity offset ~ U(-r, r)
  double noise_max = 0.02;    // additive Gaussian sigma ~ U(0, noise_max)
  double flip_probability = 0.0;  // per axis
};

/// One draw of the classic transforms. Intensity changes touch the image
/// only; flips move image and labels together.
struct TransformDraw {
  double gain = 1.0;
  double offset = 0.0;
  double noise_sigma = 0.0;
  std::array<bool, 3> flip{false, false, false};
  std::uint64_t noise_seed = 0;

  static TransformDraw sample(const TransformConfig& config, Rng& rng);
  // Source voxel that lands on (x, y, z).
  std::size_t source_index(const Geometry& g, std::int64_t x, std::int64_t y, std::int64_t z) const;
  // Transformed intensity at (x, y, z); the noise is a pure function of
  // (noise_seed, voxel), so any subset of voxels can be evaluated lazily.
  float value(const Volume3D& src, std::int64_t x, std::int64_t y, std::int64_t z) const;
  // value() for every voxel, written to out[0, src.size()).
  void render(const Volume3D& src, float* out) const;
};

std::pair<Volume3D, TractLabelMap> online_transform(const Volume3D& x, const TractLabelMap& y, Rng& rng,
                                                    const TransformConfig& config = {});
std::pair<Volume3D, TractLabelMap> apply_transform(const Volume3D& x, const TractLabelMap& y,
                                                   const TransformDraw& draw);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 4096;       // voxels per step
  std::size_t voxels_per_sample = 16384;  // drawn with replacement each epoch; 0 = every voxel
  // Share of the drawn voxels taken from the labelled foreground (union of
  // the sample's channels). Ignored when voxels_per_sample is 0.
  double foreground_fraction = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Trainable trainable = Trainable::All;
  bool online_transforms = true;
  TransformConfig transforms;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledVolume {
  Volume3D image;
  TractLabelMap labels;
};

struct TrainResult {
  SegmenterModel model;
  std::vector<double> loss_curve;       // mean training loss per epoch
  std::vector<double> validation_dice;  // mean Dice over tracts per epoch (empty without validation)
  std::size_t best_epoch = 0;           // 1-based epoch of the returned model
};

/// Trains `initial` on `samples`.
///
/// Each epoch transforms every sample (when enabled), draws its training
/// voxels, shuffles the pooled voxels and takes Adamax steps over batches.
/// With a validation volume the epoch with the highest mean Dice is
/// returned (ties go to the later epoch); otherwise the last epoch. With
/// Trainable::HeadOnly the feature parameters are never written. A
/// non-finite loss raises ErrorCode::Training.
TrainResult train(const SegmenterModel& initial, std::span<const LabeledVolume> samples, const TrainConfig& config,
                  const LabeledVolume* validation = nullptr);

}  // namespace tractaug
