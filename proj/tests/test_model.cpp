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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "model_oracle.hpp"
#include "tractaug/error.hpp"
#include "tractaug/model.hpp"
#include "tractaug/parallel.hpp"

using namespace tractaug;

namespace {

SegmenterModel random_model(Rng& rng, std::size_t hidden, std::size_t tracts) {
  std::vector<std::string> names;
  for (std::size_t t = 0; t < tracts; ++t) names.push_back("T" + std::to_string(t));
  SegmenterModel m = SegmenterModel::create(hidden, names, rng.next());
  for (auto& p : m.params) p = rng.uniform(-1.0, 1.0);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    m.input_shift[f] = rng.uniform(-0.5, 0.5);
    m.input_scale[f] = rng.uniform(0.5, 2.0);
  }
  return m;
}

FeatureArray random_features(Rng& rng, std::size_t voxels) {
  FeatureArray f;
  f.voxels = voxels;
  f.values.resize(voxels * kFeatureCount);
  for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST_CASE("features: constant volume and corner coordinates") {
  const Geometry g = Geometry::make({4, 5, 6});
  const Volume3D c(g, std::vector<float>(g.voxel_count(), 3.25f));
  const FeatureArray f = extract_features(c);
  for (std::size_t v = 0; v < f.voxels; ++v) {
    CHECK(f.row(v)[kIntensity] == 3.25);
    CHECK(f.row(v)[kLocalMean] == 3.25);
    CHECK(f.row(v)[kLocalStd] == 0.0);
    CHECK(f.row(v)[kGradientMagnitude] == 0.0);
    for (std::size_t k = kCoordX; k <= kCoordZ; ++k) {
      CHECK(f.row(v)[k] >= 0.0);
      CHECK(f.row(v)[k] <= 1.0);
    }
  }
  const double* first = f.row(0);
  const double* last = f.row(g.voxel_count() - 1);
  CHECK(first[kCoordX] == 0.0);
  CHECK(first[kCoordY] == 0.0);
  CHECK(first[kCoordZ] == 0.0);
  CHECK(last[kCoordX] == 1.0);
  CHECK(last[kCoordY] == 1.0);
  CHECK(last[kCoordZ] == 1.0);
}

TEST_CASE("features: single bright voxel, brute-force gradient oracle") {
  const Geometry g = Geometry::make({7, 7, 7});
  Volume3D x(g);
  x.data()[g.index(3, 3, 3)] = 2.f;
  const FeatureArray f = extract_features(x);
  auto clamp = [](std::int64_t v) { return std::clamp<std::int64_t>(v, 0, 6); };
  double best = 0.0;
  for (std::int64_t z = 0; z < 7; ++z)
    for (std::int64_t y = 0; y < 7; ++y)
      for (std::int64_t xx = 0; xx < 7; ++xx) {
        auto at = [&](std::int64_t a, std::int64_t b, std::int64_t c) {
          return static_cast<double>(x.at(clamp(a), clamp(b), clamp(c)));
        };
        const double gx = (at(xx + 1, y, z) - at(xx - 1, y, z)) / 2, gy = (at(xx, y + 1, z) - at(xx, y - 1, z)) / 2,
                     gz = (at(xx, y, z + 1) - at(xx, y, z - 1)) / 2;
        const double mag = std::sqrt(gx * gx + gy * gy + gz * gz);
        CHECK(f.row(g.index(xx, y, z))[kGradientMagnitude] == doctest::Approx(mag).epsilon(1e-15));
        best = std::max(best, mag);
      }
  int at_max = 0;
  for (std::size_t v = 0; v < f.voxels; ++v) at_max += f.row(v)[kGradientMagnitude] == best;
  CHECK(at_max == 6);
  for (auto [dx, dy, dz] : {std::array<int, 3>{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}})
    CHECK(f.row(g.index(3 + dx, 3 + dy, 3 + dz))[kGradientMagnitude] == best);
}

TEST_CASE("features_at agrees with the dense extraction") {
  Rng rng(3);
  const Geometry g = Geometry::make({6, 5, 4});
  const Volume3D x = testutil::random_volume(g, rng);
  const FeatureArray all = extract_features(x);
  const std::vector<std::size_t> idx{0, 17, 119, 64, 3};
  const FeatureArray some = extract_features_at(x, idx);
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(some.row(k)[f] == all.row(idx[k])[f]);
  const std::vector<std::size_t> bad{120};
  CHECK_THROWS_AS(extract_features_at(x, bad), Error);
}

TEST_CASE("forward: zero model, bias limits, naive oracle") {
  SegmenterModel m = SegmenterModel::create(4, {"a", "b"}, 1);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  Rng rng(4);
  const FeatureArray f = random_features(rng, 50);
  for (double p : forward(m, f)) CHECK(p == 0.5);

  const std::size_t b2 = m.params.size() - 2;
  m.params[b2] = 10.0;
  m.params[b2 + 1] = -10.0;
  const auto p = forward(m, f);
  for (std::size_t v = 0; v < 50; ++v) {
    CHECK(p[2 * v] > 0.9999);
    CHECK(p[2 * v] < 1.0);
    CHECK(p[2 * v + 1] < 1e-4);
    CHECK(p[2 * v + 1] > 0.0);
  }

  for (int trial = 0; trial < 10; ++trial) {
    const SegmenterModel r = random_model(rng, 1 + rng.below(8), 1 + rng.below(4));
    const FeatureArray feats = random_features(rng, 300);
    const auto probs = forward(r, feats);
    const std::vector<long double> lp(r.params.begin(), r.params.end());
    for (std::size_t v = 0; v < feats.voxels; ++v) {
      const auto z = testutil::reference_logits(r, lp, feats.row(v));
      for (std::size_t t = 0; t < r.tracts(); ++t)
        CHECK(std::fabs(probs[v * r.tracts() + t] - static_cast<double>(1.0L / (1.0L + std::exp(-z[t])))) < 1e-12);
    }
  }
}

TEST_CASE("predict: thresholds and empty prediction") {
  const Geometry g = Geometry::make({4, 4, 4});
  Rng rng(5);
  const Volume3D x = testutil::random_volume(g, rng);
  SegmenterModel m = SegmenterModel::create(3, {"a", "b"}, 2);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  const TractLabelMap half = predict(m, x);
  CHECK(half.channel(0).count() == g.voxel_count());  // p = 0.5 maps to 1
  m.params[m.params.size() - 2] = -10.0;
  m.params[m.params.size() - 1] = -10.0;
  const TractLabelMap none = predict(m, x);
  CHECK(none.channel(0).count() == 0);
  CHECK(none.channel(1).count() == 0);
  CHECK(none.names() == m.tract_names);
}

TEST_CASE("loss gradient vs long-double finite differences") {
  Rng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const SegmenterModel m = random_model(rng, 1 + rng.below(6), 1 + rng.below(3));
    const std::size_t voxels = 5;
    const FeatureArray f = random_features(rng, voxels);
    std::vector<std::uint8_t> y(voxels * m.tracts());
    for (auto& v : y) v = rng.bernoulli(0.5);
    std::vector<double> grad(m.params.size());
    const double loss = loss_and_gradient(m, f.values, y, voxels, Trainable::All, grad);
    std::vector<long double> p(m.params.begin(), m.params.end());
    CHECK(std::fabs(loss - static_cast<double>(testutil::reference_loss(m, p, f.values, y, voxels))) < 1e-12);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const long double h = 1e-5L, keep = p[i];
      p[i] = keep + h;
      const long double up = testutil::reference_loss(m, p, f.values, y, voxels);
      p[i] = keep - h;
      const long double down = testutil::reference_loss(m, p, f.values, y, voxels);
      p[i] = keep;
      const double fd = static_cast<double>((up - down) / (2 * h));
      const double rel = std::fabs(grad[i] - fd) / std::max({std::fabs(grad[i]), std::fabs(fd), 1e-8});
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("head-only gradient leaves feature entries zero") {
  Rng rng(6);
  const SegmenterModel m = random_model(rng, 5, 2);
  const FeatureArray f = random_features(rng, 40);
  std::vector<std::uint8_t> y(80, 1);
  std::vector<double> all(m.params.size()), head(m.params.size());
  loss_and_gradient(m, f.values, y, 40, Trainable::All, all);
  loss_and_gradient(m, f.values, y, 40, Trainable::HeadOnly, head);
  for (std::size_t i = 0; i < m.feature_param_count(); ++i) CHECK(head[i] == 0.0);
  for (std::size_t i = m.feature_param_count(); i < m.params.size(); ++i) CHECK(head[i] == all[i]);
  CHECK_THROWS_AS(loss_and_gradient(m, f.values, std::vector<std::uint8_t>(79), 40, Trainable::All, all), Error);
}

TEST_CASE("Adamax step bound") {
  // With m and u built from the same gradients, |step| <= lr * B_t where
  // B_t = (1 - b1) / (1 - b1^t) * sum_{j < t} (b1 / b2)^j; B_1 = 1 and
  // B_t stays within 1% of 1 for the default betas.
  Rng rng(7);
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999;
  std::vector<double> params(64, 0.0), grad(64);
  Adamax opt(64, b1, b2, 1e-8);
  double ratio_sum = 0.0;
  for (int t = 1; t <= 500; ++t) {
    ratio_sum += std::pow(b1 / b2, t - 1);
    const double bound = lr * (1 - b1) / (1 - std::pow(b1, t)) * ratio_sum;
    CHECK(bound <= lr * 1.01);
    for (auto& g : grad) g = rng.normal() * std::exp(rng.uniform(-5.0, 5.0));
    const std::vector<double> before = params;
    opt.step(params, grad, lr, 0, 64);
    for (std::size_t i = 0; i < 64; ++i) REQUIRE(std::fabs(params[i] - before[i]) <= bound * (1 + 1e-12));
  }
  // First step has magnitude lr * |g| / (|g| + eps).
  Adamax fresh(2);
  std::vector<double> p{0.0, 0.0}, g{3.0, -0.5};
  fresh.step(p, g, lr, 0, 2);
  CHECK(p[0] == doctest::Approx(-lr * 3.0 / (3.0 + 1e-8)));
  CHECK(p[1] == doctest::Approx(lr * 0.5 / (0.5 + 1e-8)));
  // Entries outside [begin, end) are untouched.
  std::vector<double> q{1.0, 1.0};
  fresh.step(q, g, lr, 1, 2);
  CHECK(q[0] == 1.0);
}

TEST_CASE("linearly separable toy problem") {
  // Two informative features on 100 voxels; the rest are zero.
  Rng rng(8);
  SegmenterModel m = SegmenterModel::create(4, {"t"}, 3);
  std::vector<double> feats(100 * kFeatureCount, 0.0);
  std::vector<std::uint8_t> y(100);
  for (std::size_t v = 0; v < 100; ++v) {
    const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
    const double margin = a + b > 0 ? 0.2 : -0.2;
    feats[v * kFeatureCount + 0] = a + margin;
    feats[v * kFeatureCount + 1] = b + margin;
    y[v] = a + b > 0;
  }
  Adamax opt(m.params.size());
  std::vector<double> grad(m.params.size());
  std::vector<double> losses;
  for (int step = 0; step < 2000; ++step) {
    losses.push_back(loss_and_gradient(m, feats, y, 100, Trainable::All, grad));
    opt.step(m.params, grad, 0.02, 0, m.params.size());
  }
  for (int i = 1; i < 10; ++i) CHECK(losses[i] < losses[i - 1]);
  FeatureArray fa;
  fa.voxels = 100;
  fa.values = feats;
  const auto probs = forward(m, fa);
  int correct = 0;
  for (std::size_t v = 0; v < 100; ++v) correct += (probs[v] >= 0.5) == (y[v] == 1);
  CHECK(correct == 100);
}

TEST_CASE("online transforms") {
  Rng rng(9);
  const Geometry g = Geometry::make({5, 4, 3});
  const Volume3D x = testutil::random_volume(g, rng);
  const TractLabelMap y = testutil::random_labels(g, 2, rng);

  TransformDraw flip;
  flip.flip = {true, false, true};
  const auto once = apply_transform(x, y, flip);
  const auto twice = apply_transform(once.first, once.second, flip);
  CHECK(twice.first == x);
  CHECK(twice.second == y);
  CHECK(once.first.at(0, 1, 0) == x.at(4, 1, 2));

  TransformDraw shift;
  shift.gain = 1.1;
  shift.offset = 0.3;
  shift.noise_sigma = 0.05;
  shift.noise_seed = 77;
  const auto s = apply_transform(x, y, shift);
  CHECK(s.second == y);
  CHECK(!(s.first == x));

  std::vector<float> rendered(x.size());
  shift.render(x, rendered.data());
  CHECK(std::equal(rendered.begin(), rendered.end(), s.first.data().begin()));
  flip.render(x, rendered.data());
  CHECK(std::equal(rendered.begin(), rendered.end(), once.first.data().begin()));

  TransformConfig cfg;
  cfg.flip_probability = 0.5;
  Rng r1(10), r2(10);
  const auto a = online_transform(x, y, r1, cfg);
  const auto b = online_transform(x, y, r2, cfg);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("model construction, new head, serialization") {
  const SegmenterModel m = SegmenterModel::create(6, {"a", "b", "c"}, 11);
  CHECK(m.params.size() == kFeatureCount * 6 + 6 + 6 * 3 + 3);
  CHECK(m.feature_param_count() == kFeatureCount * 6 + 6);
  CHECK(SegmenterModel::create(6, {"a", "b", "c"}, 11) == m);
  CHECK_THROWS_AS(SegmenterModel::create(0, {"a"}, 1), Error);

  const SegmenterModel n = m.with_new_head({"x", "y"}, 5);
  CHECK(n.tracts() == 2);
  CHECK(std::equal(n.feature_params().begin(), n.feature_params().end(), m.feature_params().begin()));
  const double a = std::sqrt(6.0 / (6 + 2));
  const auto head = n.head_params();
  for (std::size_t i = 0; i < 6 * 2; ++i) {
    CHECK(std::fabs(head[i]) <= a);
  }
  CHECK(head[12] == 0.0);
  CHECK(head[13] == 0.0);
  CHECK(m.with_new_head({"x", "y"}, 5) == n);

  const SegmenterModel back = model_from_json(model_to_json(n));
  CHECK(back == n);
  CHECK(model_to_json(back) == model_to_json(n));
  const auto dir = testutil::temp_dir("model");
  save_model(n, dir / "m.json");
  CHECK(load_model(dir / "m.json") == n);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(model_from_json("{\"format_version\": 1}"), Error);
}

TEST_CASE("train: head-only freeze, determinism, validation selection") {
  Rng rng(12);
  const Geometry g = Geometry::make({12, 12, 12});
  LabeledVolume s{testutil::random_volume(g, rng), testutil::random_labels(g, 2, rng, 0.1)};
  const SegmenterModel init = SegmenterModel::create(5, s.labels.names(), 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 128;
  cfg.voxels_per_sample = 1024;
  cfg.foreground_fraction = 0.25;
  cfg.trainable = Trainable::HeadOnly;
  cfg.seed = 4;
  const TrainResult r = train(init, std::span(&s, 1), cfg, &s);
  CHECK(std::equal(r.model.feature_params().begin(), r.model.feature_params().end(), init.feature_params().begin()));
  CHECK(r.loss_curve.size() == 3);
  CHECK(r.validation_dice.size() == 3);
  CHECK(r.best_epoch >= 1);
  CHECK(r.validation_dice[r.best_epoch - 1] == *std::max_element(r.validation_dice.begin(), r.validation_dice.end()));

  cfg.trainable = Trainable::All;
  const int before = thread_count();
  set_thread_count(1);
  const TrainResult a = train(init, std::span(&s, 1), cfg);
  set_thread_count(3);
  const TrainResult b = train(init, std::span(&s, 1), cfg);
  set_thread_count(before);
  CHECK(a.model == b.model);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.best_epoch == 3);
  CHECK(!std::equal(a.model.feature_params().begin(), a.model.feature_params().end(), init.feature_params().begin()));

  TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(init, std::span(&s, 1), bad), Error);
  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(init, std::span(&s, 1), bad), Error);
  // Head weights near the double limit overflow the logits.
  SegmenterModel huge = init;
  for (std::size_t i = huge.feature_param_count(); i < huge.params.size(); ++i) huge.params[i] = 1e308;
  try {
    train(huge, std::span(&s, 1), cfg);
    FAIL("expected a training error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Training);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
