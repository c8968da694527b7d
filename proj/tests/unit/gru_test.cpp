// Copyright 2026 The hefl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hefl/gru.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hefl/error.hpp"
#include "hefl/rng.hpp"

namespace hefl::fl {
namespace {

// Scalar GRU written directly from the gate equations, one hidden unit.
double OracleOneUnit(const std::vector<double>& p, const std::vector<double>& xs) {
  const double wzx = p[0], wzh = p[1], wrx = p[2], wrh = p[3], wcx = p[4],
               wch = p[5], bz = p[6], br = p[7], bc = p[8], wd = p[9], bd = p[10];
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double h = 0.0;
  for (double x : xs) {
    const double z = sig(wzx * x + wzh * h + bz);
    const double r = sig(wrx * x + wrh * h + br);
    const double c = std::tanh(wcx * x + wch * (r * h) + bc);
    h = (1.0 - z) * h + z * c;
  }
  return wd * h + bd;
}

TEST(ParamCount, PublishedShapes) {
  EXPECT_EQ(ParamCount(ModelShape::Stacked({5, 5})), 276u);
  EXPECT_EQ(ParamCount(ModelShape::Stacked({50, 50})), 23001u);
  ModelShape single{{{1, 1}}, false, 12};
  EXPECT_EQ(ParamCount(single), 9u);
}

TEST(ParamCount, MatchesClosedFormOverRandomShapes) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    ModelShape s;
    s.dense_output = rng.UniformBelow(2) == 1;
    size_t in = 1 + rng.UniformBelow(8);
    uint64_t expect = 0;
    const size_t layers = 1 + rng.UniformBelow(4);
    for (size_t l = 0; l < layers; ++l) {
      size_t h = 1 + rng.UniformBelow(60);
      s.layers.push_back({h, in});
      expect += 3 * (h * (h + in) + h);
      in = h;
    }
    if (s.dense_output) expect += in + 1;
    EXPECT_EQ(ParamCount(s), expect);
    EXPECT_EQ(GruModel::Zeros(s).params().size(), expect);
  }
}

TEST(ParamCount, RejectsBadShapes) {
  ModelShape s{{{5, 1}, {5, 4}}, true, 12};
  EXPECT_THROW(s.Validate(), Error);
  ModelShape empty{{}, true, 12};
  EXPECT_THROW(empty.Validate(), Error);
  EXPECT_THROW(GruModel(ModelShape::Stacked({5, 5}), ParamVector(275)), Error);
}

TEST(ShapeJson, Roundtrip) {
  auto s = ModelShape::Stacked({5, 5});
  auto j = ToJson(s);
  EXPECT_EQ(j.at("param_count"), 276);
  auto back = ModelShapeFromJson(j);
  EXPECT_EQ(ParamCount(back), 276u);
  EXPECT_EQ(back.input_shape, 12u);
}

TEST(Predict, ZeroWeightsGiveZero) {
  auto m = GruModel::Zeros(ModelShape::Stacked({5, 5}));
  std::vector<double> seq(12, 0.7);
  EXPECT_EQ(m.Predict(seq), 0.0);
}

TEST(Predict, MatchesScalarOracle) {
  Rng rng(7);
  ModelShape s{{{1, 1}}, true, 6};
  for (int t = 0; t < 100; ++t) {
    auto m = GruModel::Random(s, rng);
    std::vector<double> p = m.params();
    for (auto& v : p) v = rng.UniformReal(-2, 2);
    GruModel model(s, p);
    std::vector<double> xs(6);
    for (auto& x : xs) x = rng.UniformReal(0, 1);
    EXPECT_NEAR(model.Predict(xs), OracleOneUnit(p, xs), 1e-12);
  }
}

TEST(Predict, Deterministic) {
  Rng a(5), b(5);
  auto m1 = GruModel::Random(ModelShape::Stacked({5, 5}), a);
  auto m2 = GruModel::Random(ModelShape::Stacked({5, 5}), b);
  EXPECT_EQ(m1.params(), m2.params());
  std::vector<double> seq(12, 0.3);
  EXPECT_EQ(m1.Predict(seq), m2.Predict(seq));
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(11);
  ModelShape s{{{2, 1}, {2, 2}}, true, 5};
  auto model = GruModel::Random(s, rng);
  Sample sample;
  for (int k = 0; k < 5; ++k) sample.sequence.push_back(rng.UniformReal(0, 1));
  sample.target = 0.4;
  std::vector<double> grad(model.params().size());
  model.LossAndGradient(sample, grad);
  const double eps = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const size_t k = rng.UniformBelow(model.params().size());
    auto plus = model.params(), minus = model.params();
    plus[k] += eps;
    minus[k] -= eps;
    std::vector<double> scratch(plus.size());
    const double lp = GruModel(s, plus).LossAndGradient(sample, scratch);
    const double lm = GruModel(s, minus).LossAndGradient(sample, scratch);
    const double fd = (lp - lm) / (2 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-8});
    EXPECT_LT(std::abs(fd - grad[k]) / denom, 1e-4) << "param " << k;
  }
}

TEST(Train, ConstantSeriesConverges) {
  Rng rng(3);
  auto s = ModelShape::Stacked({5, 5});
  auto model = GruModel::Random(s, rng);
  std::vector<Sample> samples(12, Sample{std::vector<double>(12, 0.5), 0.5});
  TrainOptions opt;
  opt.epochs = 200;
  opt.learning_rate = 0.05;
  auto res = model.Train(samples, opt);
  GruModel trained(s, res.params);
  EXPECT_NEAR(trained.Predict(samples[0].sequence), 0.5, 0.025);
  EXPECT_LT(res.epoch_loss.back(), res.epoch_loss.front());
}

TEST(Train, ZeroEpochsRejected) {
  auto model = GruModel::Zeros(ModelShape::Stacked({5, 5}));
  std::vector<Sample> samples(1, Sample{std::vector<double>(12, 0.5), 0.5});
  TrainOptions opt;
  opt.epochs = 0;
  try {
    model.Train(samples, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining);
  }
  opt.epochs = 1;
  EXPECT_THROW(model.Train({}, opt), Error);
}

TEST(Train, DivergenceDetected) {
  Rng rng(1);
  auto s = ModelShape::Stacked({5, 5});
  auto model = GruModel::Random(s, rng);
  std::vector<Sample> samples(4, Sample{std::vector<double>(12, 1.0), 1e300});
  TrainOptions opt;
  opt.epochs = 3;
  opt.learning_rate = 1e10;
  try {
    model.Train(samples, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
  }
}

TEST(Train, DropoutSeededAndDeterministic) {
  Rng rng(2);
  auto s = ModelShape::Stacked({5, 5});
  auto model = GruModel::Random(s, rng);
  std::vector<Sample> samples(6, Sample{std::vector<double>(12, 0.3), 0.6});
  TrainOptions opt;
  opt.dropout = 0.3;
  opt.dropout_seed = 9;
  EXPECT_EQ(model.Train(samples, opt).params, model.Train(samples, opt).params);
  TrainOptions plain;
  EXPECT_NE(model.Train(samples, opt).params, model.Train(samples, plain).params);
}

}  // namespace
}  // namespace hefl::fl
