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

#include "tractaug/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Core>

#include "json.hpp"
#include "tractaug/error.hpp"
#include "tractaug/log.hpp"
#include "tractaug/metrics.hpp"
#include "tractaug/parallel.hpp"

namespace tractaug {

using nlohmann::json;

namespace {

constexpr std::size_t kChunk = 256;
constexpr int kModelFormatVersion = 1;

inline std::int64_t clampi(std::int64_t v, std::int64_t hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

// Features of voxel (x, y, z) read from a dense float image.
void voxel_features(const Geometry& g, const float* img, std::int64_t x, std::int64_t y, std::int64_t z,
                    double* out) {
  const std::int64_t mx = g.dims[0] - 1, my = g.dims[1] - 1, mz = g.dims[2] - 1;
  const double center = img[g.index(x, y, z)];
  // Deviations from the centre keep a constant neighbourhood's std exactly zero.
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    const std::int64_t zz = clampi(z + dz, mz);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      const std::int64_t yy = clampi(y + dy, my);
      const float* rowp = img + g.index(0, yy, zz);
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const double d = static_cast<double>(rowp[clampi(x + dx, mx)]) - center;
        sum += d;
        sum2 += d * d;
      }
    }
  }
  const double mean_dev = sum / 27.0;
  const double var = std::max(0.0, sum2 / 27.0 - mean_dev * mean_dev);
  auto at = [&](std::int64_t xx, std::int64_t yy, std::int64_t zz) {
    return static_cast<double>(img[g.index(clampi(xx, mx), clampi(yy, my), clampi(zz, mz))]);
  };
  const double gx = 0.5 * (at(x + 1, y, z) - at(x - 1, y, z));
  const double gy = 0.5 * (at(x, y + 1, z) - at(x, y - 1, z));
  const double gz = 0.5 * (at(x, y, z + 1) - at(x, y, z - 1));
  out[kIntensity] = center;
  out[kLocalMean] = center + mean_dev;
  out[kLocalStd] = std::sqrt(var);
  out[kGradientMagnitude] = std::sqrt(gx * gx + gy * gy + gz * gz);
  out[kCoordX] = mx > 0 ? static_cast<double>(x) / static_cast<double>(mx) : 0.0;
  out[kCoordY] = my > 0 ? static_cast<double>(y) / static_cast<double>(my) : 0.0;
  out[kCoordZ] = mz > 0 ? static_cast<double>(z) / static_cast<double>(mz) : 0.0;
}

void voxel_coords(const Geometry& g, std::size_t v, std::int64_t& x, std::int64_t& y, std::int64_t& z) {
  const auto i = static_cast<std::int64_t>(v);
  x = i % g.dims[0];
  y = (i / g.dims[0]) % g.dims[1];
  z = i / (g.dims[0] * g.dims[1]);
}

FeatureArray features_at(const Geometry& g, const float* img, std::span<const std::size_t> voxels) {
  FeatureArray out;
  out.voxels = voxels.size();
  out.values.resize(voxels.size() * kFeatureCount);
  const std::size_t chunks = (voxels.size() + 4095) / 4096;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(voxels.size(), (c + 1) * 4096);
    for (std::size_t k = c * 4096; k < end; ++k) {
      std::int64_t x, y, z;
      voxel_coords(g, voxels[k], x, y, z);
      voxel_features(g, img, x, y, z, out.values.data() + k * kFeatureCount);
    }
  });
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}


// Standard normal bank shared by every transform draw. Voxel v of a draw
// reads entry (noise_seed + v) mod kNoiseBankSize, so the noise field is a
// pure function of (noise_seed, voxel) and costs one load per voxel.
constexpr std::size_t kNoiseBankBits = 20;
constexpr std::size_t kNoiseBankMask = (std::size_t{1} << kNoiseBankBits) - 1;

const std::vector<float>& noise_bank() {
  static const std::vector<float> bank = [] {
    std::vector<float> out(kNoiseBankMask + 1);
    Rng rng(0x6e6f697365ULL);  // "noise"
    for (auto& v : out) v = static_cast<float>(rng.normal());
    return out;
  }();
  return bank;
}

inline double voxel_noise(std::uint64_t seed, std::size_t v) {
  return noise_bank()[(static_cast<std::size_t>(seed) + v) & kNoiseBankMask];
}

}  // namespace

const char* feature_name(std::size_t f) {
  static const char* kNames[] = {"intensity", "local_mean", "local_std", "gradient_magnitude", "x", "y", "z"};
  return f < kFeatureCount ? kNames[f] : "?";
}

FeatureArray extract_features(const Volume3D& x) {
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return features_at(x.geometry(), x.data().data(), all);
}

FeatureArray extract_features_at(const Volume3D& x, std::span<const std::size_t> voxels) {
  for (auto v : voxels)
    if (v >= x.size()) fail(ErrorCode::InvalidArgument, "voxel index out of range");
  return features_at(x.geometry(), x.data().data(), voxels);
}

// ---------------------------------------------------------------------------

SegmenterModel SegmenterModel::create(std::size_t hidden, std::vector<std::string> tract_names, std::uint64_t seed) {
  if (hidden < 1) fail(ErrorCode::InvalidArgument, "hidden layer size must be >= 1");
  if (tract_names.empty()) fail(ErrorCode::InvalidArgument, "model needs at least one output tract");
  SegmenterModel m;
  m.hidden = hidden;
  m.tract_names = std::move(tract_names);
  m.input_shift.assign(m.feature_count, 0.0);
  m.input_scale.assign(m.feature_count, 1.0);
  m.params.assign(m.feature_param_count() + m.head_param_count(), 0.0);
  Rng rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(m.feature_count + hidden));
  for (std::size_t i = 0; i < m.feature_count * hidden; ++i) m.params[i] = rng.uniform(-a, a);
  return m.with_new_head(m.tract_names, mix_seed(seed, 0x68656164));  // "head"
}

SegmenterModel SegmenterModel::with_new_head(std::vector<std::string> names, std::uint64_t seed) const {
  if (names.empty()) fail(ErrorCode::InvalidArgument, "model needs at least one output tract");
  SegmenterModel m;
  m.feature_count = feature_count;
  m.hidden = hidden;
  m.tract_names = std::move(names);
  m.input_shift = input_shift;
  m.input_scale = input_scale;
  m.params.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(feature_param_count()));
  m.params.resize(m.feature_param_count() + m.head_param_count(), 0.0);
  Rng rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(hidden + m.tracts()));
  for (std::size_t i = 0; i < hidden * m.tracts(); ++i) m.params[m.feature_param_count() + i] = rng.uniform(-a, a);
  return m;
}

void SegmenterModel::validate() const {
  if (feature_count != kFeatureCount)
    fail(ErrorCode::InvalidArgument, "model expects " + std::to_string(feature_count) + " features, library provides " +
                                         std::to_string(kFeatureCount));
  if (hidden < 1) fail(ErrorCode::InvalidArgument, "hidden layer size must be >= 1");
  if (tract_names.empty()) fail(ErrorCode::InvalidArgument, "model has no output tracts");
  if (input_shift.size() != feature_count || input_scale.size() != feature_count)
    fail(ErrorCode::InvalidArgument, "model normalization has the wrong length");
  if (params.size() != feature_param_count() + head_param_count())
    fail(ErrorCode::InvalidArgument, "model has " + std::to_string(params.size()) + " parameters, expected " +
                                         std::to_string(feature_param_count() + head_param_count()));
  for (double p : params)
    if (!std::isfinite(p)) fail(ErrorCode::InvalidArgument, "model has non-finite parameters");
  for (std::size_t f = 0; f < feature_count; ++f)
    if (!std::isfinite(input_shift[f]) || !std::isfinite(input_scale[f]) || input_scale[f] == 0.0)
      fail(ErrorCode::InvalidArgument, "model normalization is invalid");
}

void fit_normalization(SegmenterModel& model, const FeatureArray& features) {
  if (features.voxels == 0) fail(ErrorCode::InvalidArgument, "cannot fit normalization on zero voxels");
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double mean = 0.0;
    for (std::size_t v = 0; v < features.voxels; ++v) mean += features.row(v)[f];
    mean /= static_cast<double>(features.voxels);
    double var = 0.0;
    for (std::size_t v = 0; v < features.voxels; ++v) {
      const double d = features.row(v)[f] - mean;
      var += d * d;
    }
    var /= static_cast<double>(features.voxels);
    model.input_shift[f] = mean;
    model.input_scale[f] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;

// Views of the flat parameter vector.
struct Layers {
  ConstMatrixMap w1;
  ConstRowMap b1;
  ConstMatrixMap w2;
  ConstRowMap b2;
  ConstRowMap shift, scale;

  explicit Layers(const SegmenterModel& m)
      : w1(m.params.data(), m.feature_count, m.hidden),
        b1(m.params.data() + m.feature_count * m.hidden, m.hidden),
        w2(m.params.data() + m.feature_param_count(), m.hidden, m.tracts()),
        b2(m.params.data() + m.feature_param_count() + m.hidden * m.tracts(), m.tracts()),
        shift(m.input_shift.data(), m.feature_count),
        scale(m.input_scale.data(), m.feature_count) {}
};

// Normalized inputs, pre-activations, activations and logits for `n`
// consecutive feature rows.
void forward_block(const Layers& l, const double* feats, std::size_t n, RowMatrix& z, RowMatrix& pre, RowMatrix& act,
                   RowMatrix& logits) {
  const ConstMatrixMap x(feats, static_cast<Eigen::Index>(n), l.w1.rows());
  z = ((x.rowwise() - l.shift).array().rowwise() * l.scale.array()).matrix();
  pre.noalias() = z * l.w1;
  pre.rowwise() += l.b1;
  act = pre.cwiseMax(0.0);
  logits.noalias() = act * l.w2;
  logits.rowwise() += l.b2;
}

constexpr std::size_t kForwardChunk = 4096;

}  // namespace

std::vector<double> forward(const SegmenterModel& model, const FeatureArray& features) {
  model.validate();
  const std::size_t T = model.tracts();
  const Layers layers(model);
  std::vector<double> probs(features.voxels * T);
  const std::size_t chunks = (features.voxels + kForwardChunk - 1) / kForwardChunk;
  parallel_for(chunks, [&](std::size_t c) {
    RowMatrix z, pre, act, logits;
    const std::size_t begin = c * kForwardChunk, n = std::min(features.voxels, begin + kForwardChunk) - begin;
    forward_block(layers, features.row(begin), n, z, pre, act, logits);
    const double* lp = logits.data();
    for (std::size_t i = 0; i < n * T; ++i) probs[begin * T + i] = open_unit(sigmoid(lp[i]));
  });
  return probs;
}

double loss_and_gradient(const SegmenterModel& model, std::span<const double> features,
                         std::span<const std::uint8_t> labels, std::size_t voxels, Trainable trainable,
                         std::span<double> grad) {
  const std::size_t F = model.feature_count, H = model.hidden, T = model.tracts();
  if (features.size() != voxels * F)
    fail(ErrorCode::InvalidArgument, "feature batch has " + std::to_string(features.size()) + " values, expected " +
                                         std::to_string(voxels * F));
  if (labels.size() != voxels * T) fail(ErrorCode::InvalidArgument, "label batch does not match the model's tracts");
  if (voxels == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const bool want_grad = !grad.empty();
  const std::size_t P = model.params.size();
  if (want_grad && grad.size() != P) fail(ErrorCode::InvalidArgument, "gradient buffer has the wrong size");
  const bool feature_grad = trainable == Trainable::All;
  const double norm = 1.0 / static_cast<double>(voxels * T);

  const std::size_t chunks = (voxels + kChunk - 1) / kChunk;
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(want_grad ? chunks : 0);
  const Layers layers(model);

  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk, n = std::min(voxels, begin + kChunk) - begin;
    RowMatrix z, pre, act, logits;
    forward_block(layers, features.data() + begin * F, n, z, pre, act, logits);
    RowMatrix delta(n, T);
    double loss = 0.0;
    const std::uint8_t* y = labels.data() + begin * T;
    const double* lp = logits.data();
    double* dp = delta.data();
    for (std::size_t i = 0; i < n * T; ++i) {
      // One exp serves both the loss and the sigmoid.
      const double e = std::exp(-std::fabs(lp[i]));
      const double p = lp[i] >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      loss += std::max(lp[i], 0.0) - lp[i] * y[i] + std::log1p(e);
      dp[i] = (p - y[i]) * norm;
    }
    chunk_loss[c] = loss;
    if (!want_grad) return;
    auto& g = chunk_grad[c];
    g.assign(P, 0.0);
    Eigen::Map<RowMatrix> gw1(g.data(), F, H);
    Eigen::Map<Eigen::RowVectorXd> gb1(g.data() + F * H, H);
    Eigen::Map<RowMatrix> gw2(g.data() + F * H + H, H, T);
    Eigen::Map<Eigen::RowVectorXd> gb2(g.data() + F * H + H + H * T, T);
    gw2.noalias() = act.transpose() * delta;
    gb2 = delta.colwise().sum();
    if (!feature_grad) return;
    RowMatrix dpre = delta * layers.w2.transpose();
    dpre = (pre.array() > 0.0).select(dpre, 0.0);
    gw1.noalias() = z.transpose() * dpre;
    gb1 = dpre.colwise().sum();
  });

  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& cg : chunk_grad)
      for (std::size_t i = 0; i < P; ++i) grad[i] += cg[i];
  }
  return loss * norm;
}

TractLabelMap predict(const SegmenterModel& model, const Volume3D& x) {
  return predict(model, extract_features(x), x.geometry());
}

TractLabelMap predict(const SegmenterModel& model, const FeatureArray& features, const Geometry& geometry) {
  if (features.voxels != geometry.voxel_count())
    fail(ErrorCode::InvalidArgument, "predict: " + std::to_string(features.voxels) + " feature rows for " +
                                         std::to_string(geometry.voxel_count()) + " voxels");
  const std::vector<double> probs = forward(model, features);
  const std::size_t T = model.tracts();
  std::vector<BinaryMask3D> channels;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::uint8_t> bits(features.voxels);
    for (std::size_t v = 0; v < bits.size(); ++v) bits[v] = probs[v * T + t] >= 0.5 ? 1 : 0;
    channels.emplace_back(geometry, std::move(bits));
  }
  return TractLabelMap(model.tract_names, std::move(channels));
}

// ---------------------------------------------------------------------------

std::string model_to_json(const SegmenterModel& m) {
  m.validate();
  const std::size_t F = m.feature_count, H = m.hidden, T = m.tracts();
  json doc;
  doc["format"] = "tractaug-segmenter";
  doc["format_version"] = kModelFormatVersion;
  doc["activation"] = "relu";
  json names = json::array();
  for (std::size_t f = 0; f < F; ++f) names.push_back(feature_name(f));
  doc["features"] = names;
  doc["hidden"] = H;
  doc["tracts"] = m.tract_names;
  doc["normalization"] = {{"shift", m.input_shift}, {"scale", m.input_scale}};
  json w1 = json::array();
  for (std::size_t f = 0; f < F; ++f)
    w1.push_back(std::vector<double>(m.params.begin() + f * H, m.params.begin() + (f + 1) * H));
  doc["feature_layer"] = {{"weights", w1},
                          {"bias", std::vector<double>(m.params.begin() + F * H, m.params.begin() + F * H + H)}};
  const std::size_t head = m.feature_param_count();
  json w2 = json::array();
  for (std::size_t h = 0; h < H; ++h)
    w2.push_back(std::vector<double>(m.params.begin() + head + h * T, m.params.begin() + head + (h + 1) * T));
  doc["head"] = {{"weights", w2},
                 {"bias", std::vector<double>(m.params.begin() + head + H * T, m.params.begin() + head + H * T + T)}};
  return doc.dump(1) + "\n";
}

SegmenterModel model_from_json(const std::string& text, const std::string& origin) {
  auto bad = [&](const std::string& what) -> void { fail(ErrorCode::Schema, "model '" + origin + "': " + what); };
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("document must be an object");
  static const char* kKeys[] = {"format", "format_version", "activation", "features", "hidden",
                                "tracts", "normalization",  "feature_layer", "head"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys)) bad("unknown field '" + it.key() + "'");
  for (const char* k : kKeys)
    if (!doc.contains(k)) bad(std::string("missing field '") + k + "'");
  try {
    if (doc["format"] != "tractaug-segmenter") bad("not a segmenter checkpoint");
    if (doc["format_version"] != kModelFormatVersion) bad("unsupported format_version");
    if (doc["activation"] != "relu") bad("unsupported activation");
    const auto features = doc["features"].get<std::vector<std::string>>();
    if (features.size() != kFeatureCount) bad("feature list has the wrong length");
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      if (features[f] != feature_name(f)) bad("feature " + std::to_string(f) + " is '" + features[f] + "'");
    SegmenterModel m;
    m.hidden = doc["hidden"].get<std::size_t>();
    m.tract_names = doc["tracts"].get<std::vector<std::string>>();
    const std::size_t F = m.feature_count, H = m.hidden, T = m.tracts();
    m.input_shift = doc["normalization"].at("shift").get<std::vector<double>>();
    m.input_scale = doc["normalization"].at("scale").get<std::vector<double>>();
    const auto w1 = doc["feature_layer"].at("weights").get<std::vector<std::vector<double>>>();
    const auto b1 = doc["feature_layer"].at("bias").get<std::vector<double>>();
    const auto w2 = doc["head"].at("weights").get<std::vector<std::vector<double>>>();
    const auto b2 = doc["head"].at("bias").get<std::vector<double>>();
    if (w1.size() != F || b1.size() != H || w2.size() != H || b2.size() != T) bad("parameter shapes do not match");
    for (const auto& row : w1)
      if (row.size() != H) bad("feature_layer.weights rows must have 'hidden' entries");
    for (const auto& row : w2)
      if (row.size() != T) bad("head.weights rows must have one entry per tract");
    for (const auto& row : w1) m.params.insert(m.params.end(), row.begin(), row.end());
    m.params.insert(m.params.end(), b1.begin(), b1.end());
    for (const auto& row : w2) m.params.insert(m.params.end(), row.begin(), row.end());
    m.params.insert(m.params.end(), b2.begin(), b2.end());
    m.validate();
    return m;
  } catch (const json::exception& e) {
    bad(std::string("malformed field: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    bad(e.what());
  }
  return {};
}

void save_model(const SegmenterModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write model '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write model '" + path.string() + "'");
}

SegmenterModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), path.string());
}

// ---------------------------------------------------------------------------

Adamax::Adamax(std::size_t size, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), u_(size, 0.0) {}

void Adamax::step(std::span<double> params, std::span<const double> grad, double learning_rate, std::size_t begin,
                  std::size_t end) {
  if (params.size() != m_.size() || grad.size() != m_.size() || begin > end || end > m_.size())
    fail(ErrorCode::InvalidArgument, "Adamax step: size mismatch");
  ++t_;
  beta1_power_ *= beta1_;
  const double step_size = learning_rate / (1.0 - beta1_power_);
  for (std::size_t i = begin; i < end; ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    u_[i] = std::max(beta2_ * u_[i], std::fabs(grad[i]));
    params[i] -= step_size * m_[i] / (u_[i] + epsilon_);
  }
}

// ---------------------------------------------------------------------------

TransformDraw TransformDraw::sample(const TransformConfig& config, Rng& rng) {
  TransformDraw d;
  d.gain = rng.uniform(1.0 - config.scale_range, 1.0 + config.scale_range);
  d.offset = rng.uniform(-config.shift_range, config.shift_range);
  d.noise_sigma = rng.uniform(0.0, config.noise_max);
  for (auto& f : d.flip) f = rng.bernoulli(config.flip_probability);
  d.noise_seed = rng.next();
  return d;
}

std::size_t TransformDraw::source_index(const Geometry& g, std::int64_t x, std::int64_t y, std::int64_t z) const {
  return g.index(flip[0] ? g.dims[0] - 1 - x : x, flip[1] ? g.dims[1] - 1 - y : y, flip[2] ? g.dims[2] - 1 - z : z);
}

float TransformDraw::value(const Volume3D& src, std::int64_t x, std::int64_t y, std::int64_t z) const {
  const Geometry& g = src.geometry();
  double v = gain * src.data()[source_index(g, x, y, z)] + offset;
  if (noise_sigma > 0.0) v += noise_sigma * voxel_noise(noise_seed, g.index(x, y, z));
  return static_cast<float>(v);
}

void TransformDraw::render(const Volume3D& src, float* out) const {
  const Geometry& g = src.geometry();
  const float* in = src.data().data();
  const float* bank = noise_bank().data();
  const std::size_t base = static_cast<std::size_t>(noise_seed);
  const bool noisy = noise_sigma > 0.0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y) {
      const std::size_t row = g.index(0, y, z);
      const float* srow = in + source_index(g, 0, y, z) - (flip[0] ? g.dims[0] - 1 : 0);
      for (std::int64_t x = 0; x < g.dims[0]; ++x) {
        const std::size_t v = row + static_cast<std::size_t>(x);
        double value = gain * srow[flip[0] ? g.dims[0] - 1 - x : x] + offset;
        if (noisy) value += noise_sigma * static_cast<double>(bank[(base + v) & kNoiseBankMask]);
        out[v] = static_cast<float>(value);
      }
    }
}

std::pair<Volume3D, TractLabelMap> apply_transform(const Volume3D& x, const TractLabelMap& y,
                                                   const TransformDraw& draw) {
  require_same_geometry(x.geometry(), y.geometry(), "online_transform");
  const Geometry& g = x.geometry();
  std::vector<float> img(x.size());
  std::vector<std::vector<std::uint8_t>> lab(y.channel_count(), std::vector<std::uint8_t>(x.size()));
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t yy = 0; yy < g.dims[1]; ++yy)
      for (std::int64_t xx = 0; xx < g.dims[0]; ++xx) {
        const std::size_t dst = g.index(xx, yy, z);
        const std::size_t src = draw.source_index(g, xx, yy, z);
        img[dst] = draw.value(x, xx, yy, z);
        for (std::size_t j = 0; j < lab.size(); ++j) lab[j][dst] = y.channel(j).data()[src];
      }
  std::vector<BinaryMask3D> channels;
  for (auto& bits : lab) channels.emplace_back(g, std::move(bits));
  return {Volume3D(g, std::move(img)), TractLabelMap(y.names(), std::move(channels))};
}

std::pair<Volume3D, TractLabelMap> online_transform(const Volume3D& x, const TractLabelMap& y, Rng& rng,
                                                    const TransformConfig& config) {
  return apply_transform(x, y, TransformDraw::sample(config, rng));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be > 0");
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    fail(ErrorCode::InvalidArgument, "Adamax hyperparameters out of range");
  if (!(foreground_fraction >= 0.0 && foreground_fraction <= 1.0))
    fail(ErrorCode::InvalidArgument, "foreground fraction must lie in [0, 1]");
  if (!(transforms.scale_range >= 0.0 && transforms.scale_range < 1.0) || !(transforms.shift_range >= 0.0) ||
      !(transforms.noise_max >= 0.0) || !(transforms.flip_probability >= 0.0 && transforms.flip_probability <= 1.0))
    fail(ErrorCode::InvalidArgument, "online transform settings out of range");
}

namespace {

double mean_dice(const SegmenterModel& model, const FeatureArray& feats, const TractLabelMap& truth,
                 const std::vector<std::size_t>& channel_of) {
  const std::vector<double> probs = forward(model, feats);
  const std::size_t T = model.tracts();
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    auto gt = truth.channel(channel_of[t]).data();
    std::size_t np = 0, ng = 0, both = 0;
    for (std::size_t v = 0; v < feats.voxels; ++v) {
      const std::size_t p = probs[v * T + t] >= 0.5 ? 1 : 0;
      np += p;
      ng += gt[v];
      both += p & gt[v];
    }
    total += np + ng == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(np + ng);
  }
  return total / static_cast<double>(T);
}

// Hidden activations of every voxel; fixed while the feature layer is frozen.
std::vector<RowMatrix> hidden_activations(const SegmenterModel& model, const FeatureArray& feats) {
  const Layers layers(model);
  std::vector<RowMatrix> out((feats.voxels + kForwardChunk - 1) / kForwardChunk);
  parallel_for(out.size(), [&](std::size_t c) {
    RowMatrix z, pre, logits;
    const std::size_t begin = c * kForwardChunk, n = std::min(feats.voxels, begin + kForwardChunk) - begin;
    forward_block(layers, feats.row(begin), n, z, pre, out[c], logits);
  });
  return out;
}

// Same as mean_dice, with the hidden layer taken from `act` (same chunking
// as forward, so the logits match it exactly).
double mean_dice_from_hidden(const SegmenterModel& model, const std::vector<RowMatrix>& act,
                             const TractLabelMap& truth, const std::vector<std::size_t>& channel_of) {
  const std::size_t T = model.tracts();
  const Layers layers(model);
  std::vector<std::size_t> np(T, 0), ng(T, 0), both(T, 0);
  RowMatrix logits;
  for (std::size_t c = 0; c < act.size(); ++c) {
    logits.noalias() = act[c] * layers.w2;
    logits.rowwise() += layers.b2;
    const std::size_t begin = c * kForwardChunk;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t p = open_unit(sigmoid(logits(i, static_cast<Eigen::Index>(t)))) >= 0.5 ? 1 : 0;
        const std::size_t g = truth.channel(channel_of[t]).data()[begin + static_cast<std::size_t>(i)];
        np[t] += p;
        ng[t] += g;
        both[t] += p & g;
      }
  }
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    total += np[t] + ng[t] == 0 ? 1.0 : 2.0 * static_cast<double>(both[t]) / static_cast<double>(np[t] + ng[t]);
  return total / static_cast<double>(T);
}

std::vector<std::size_t> channel_map(const SegmenterModel& model, const TractLabelMap& labels) {
  std::vector<std::size_t> out;
  for (const auto& name : model.tract_names) out.push_back(labels.find(name));
  return out;
}

}  // namespace

TrainResult train(const SegmenterModel& initial, std::span<const LabeledVolume> samples, const TrainConfig& config,
                  const LabeledVolume* validation) {
  config.validate();
  initial.validate();
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "training needs at least one sample");
  const std::size_t F = initial.feature_count, T = initial.tracts();
  std::vector<std::vector<std::size_t>> maps;
  for (const auto& s : samples) {
    require_same_geometry(s.image.geometry(), s.labels.geometry(), "training sample");
    maps.push_back(channel_map(initial, s.labels));
  }
  std::vector<std::vector<std::size_t>> foreground(samples.size());
  if (config.foreground_fraction > 0.0 && config.voxels_per_sample > 0) {
    parallel_for(samples.size(), [&](std::size_t s) {
      const auto& labels = samples[s].labels;
      for (std::size_t v = 0; v < samples[s].image.size(); ++v)
        for (std::size_t t = 0; t < T; ++t)
          if (labels.channel(maps[s][t]).data()[v]) {
            foreground[s].push_back(v);
            break;
          }
    });
  }

  TrainResult result;
  result.model = initial;
  SegmenterModel& model = result.model;
  SegmenterModel best = initial;
  double best_dice = -1.0;
  FeatureArray val_feats;
  std::vector<std::size_t> val_map;
  if (validation) {
    val_feats = extract_features(validation->image);
    val_map = channel_map(initial, validation->labels);
  }
  std::vector<RowMatrix> val_hidden;
  if (validation && config.trainable == Trainable::HeadOnly) val_hidden = hidden_activations(initial, val_feats);

  Adamax opt(model.params.size(), config.beta1, config.beta2, config.epsilon);
  const std::size_t begin = config.trainable == Trainable::All ? 0 : model.feature_param_count();
  Rng shuffle_rng(mix_seed(config.seed, 0x73687566));  // "shuf"
  std::vector<double> grad(model.params.size());
  std::vector<double> batch_feats;
  std::vector<std::uint8_t> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<double> pool_feats;
    std::vector<std::uint8_t> pool_labels;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const LabeledVolume& sample = samples[s];
      const Geometry& g = sample.image.geometry();
      Rng rng(mix_seed(config.seed, epoch, s));
      TransformDraw draw;
      if (config.online_transforms) draw = TransformDraw::sample(config.transforms, rng);
      std::vector<float> img(sample.image.size());
      draw.render(sample.image, img.data());

      std::vector<std::size_t> voxels;
      const std::size_t n = sample.image.size();
      if (config.voxels_per_sample == 0) {
        voxels.resize(n);
        for (std::size_t v = 0; v < n; ++v) voxels[v] = v;
      } else {
        voxels.resize(config.voxels_per_sample);
        const auto n_fg = static_cast<std::size_t>(config.foreground_fraction * static_cast<double>(voxels.size()));
        const auto& fg = foreground[s];
        for (std::size_t k = 0; k < voxels.size(); ++k) {
          if (k < n_fg && !fg.empty()) {
            // Flips are involutions, so mapping a source voxel gives its transformed position.
            std::int64_t x, y, z;
            voxel_coords(g, fg[rng.below(fg.size())], x, y, z);
            voxels[k] = draw.source_index(g, x, y, z);
          } else {
            voxels[k] = rng.below(n);
          }
        }
      }
      const FeatureArray feats = features_at(g, img.data(), voxels);
      pool_feats.insert(pool_feats.end(), feats.values.begin(), feats.values.end());
      for (std::size_t v : voxels) {
        std::int64_t x, y, z;
        voxel_coords(g, v, x, y, z);
        const std::size_t src = draw.source_index(g, x, y, z);
        for (std::size_t t = 0; t < T; ++t) pool_labels.push_back(sample.labels.channel(maps[s][t]).data()[src]);
      }
    }

    const std::size_t pool = pool_labels.size() / T;
    std::vector<std::size_t> order(pool);
    for (std::size_t i = 0; i < pool; ++i) order[i] = i;
    for (std::size_t i = pool; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pool; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, pool - start);
      batch_feats.resize(b * F);
      batch_labels.resize(b * T);
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t r = order[start + k];
        std::copy_n(pool_feats.data() + r * F, F, batch_feats.data() + k * F);
        std::copy_n(pool_labels.data() + r * T, T, batch_labels.data() + k * T);
      }
      const double loss = loss_and_gradient(model, batch_feats, batch_labels, b, config.trainable, grad);
      bool finite = std::isfinite(loss);
      for (std::size_t i = begin; finite && i < grad.size(); ++i) finite = std::isfinite(grad[i]);
      if (!finite)
        fail(ErrorCode::Training, "non-finite loss or gradient at epoch " + std::to_string(epoch) + ", batch starting at " +
                                      std::to_string(start) + " (loss " + std::to_string(loss) + ", lr " +
                                      std::to_string(config.learning_rate) + ")");
      opt.step(model.params, grad, config.learning_rate, begin, model.params.size());
      epoch_loss += loss * static_cast<double>(b);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(pool));

    if (validation) {
      const double d = val_hidden.empty()
                           ? mean_dice(model, val_feats, validation->labels, val_map)
                           : mean_dice_from_hidden(model, val_hidden, validation->labels, val_map);
      result.validation_dice.push_back(d);
      if (d >= best_dice) {
        best_dice = d;
        best = model;
        result.best_epoch = epoch;
      }
    }
    log::debug("epoch ", epoch, "/", config.epochs, " loss ", result.loss_curve.back(),
               validation ? " val dice " + std::to_string(result.validation_dice.back()) : std::string());
  }
  if (validation) {
    model = std::move(best);
  } else {
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace tractaug
