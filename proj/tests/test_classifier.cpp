// tests/test_classifier.cpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ddsd/classifier.hpp"
#include "oracles.hpp"

namespace {

using ddsd::ClassifierModel;
using ddsd::LabeledEmbedding;
using ddsd::LinearHead;

std::vector<std::vector<double>> Rows(const LinearHead &h) {
  std::vector<std::vector<double>> w(2, std::vector<double>(h.dim()));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < h.dim(); ++j) w[k][j] = h.weights(k, j);
  return w;
}

LinearHead RandomHead(std::mt19937_64 &rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  LinearHead h(dim);
  for (double &w : h.weights.data) w = nd(rng);
  h.bias = {nd(rng), nd(rng)};
  return h;
}

std::vector<double> RandomVec(std::mt19937_64 &rng, std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> x(dim);
  for (double &v : x) v = nd(rng);
  return x;
}

bool CloseRel(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

TEST(Head, ForwardMatchesScalarLoop) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    std::size_t dim = 1 + t;
    LinearHead h = RandomHead(rng, dim);
    auto x = RandomVec(rng, dim);
    auto z = ddsd::Forward(h, x);
    for (std::size_t k = 0; k < 2; ++k) {
      double acc = h.bias[k];
      for (std::size_t j = 0; j < dim; ++j) acc += h.weights.data[k * dim + j] * x[j];
      EXPECT_NEAR(z[k], acc, 1e-12);
    }
  }
  LinearHead h(3);
  EXPECT_THROW(ddsd::Forward(h, std::vector<double>(4)), ddsd::ValidationError);
}

TEST(Head, SoftmaxAndScore) {
  auto p = ddsd::Softmax({1.0, 3.0});
  EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
  auto big = ddsd::Softmax({1000.0, 0.0});
  EXPECT_EQ(big[0], 1.0);
  EXPECT_TRUE(std::isfinite(big[1]));
  EXPECT_EQ(ddsd::ScoreFromLogits({0.0, 0.0}), 0.5);
}

TEST(Head, CrossEntropyValues) {
  EXPECT_NEAR(ddsd::CrossEntropyLoss({0.0, 0.0}, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(ddsd::CrossEntropyLoss({0.0, 0.0}, 0), 0.6931471805599453, 1e-15);
  // A confident, correct prediction: log1p(exp(-20)) = 2.0611536e-9.
  double tiny = ddsd::CrossEntropyLoss({0.0, 20.0}, 1);
  EXPECT_NEAR(tiny / 2.0611536203143807e-9, 1.0, 1e-10);
  EXPECT_NEAR(ddsd::CrossEntropyLoss({0.0, 20.0}, 0), 20.0 + 2.0611536203143807e-9, 1e-12);
  EXPECT_TRUE(std::isfinite(ddsd::CrossEntropyLoss({-800.0, 800.0}, 0)));
  EXPECT_THROW(ddsd::CrossEntropyLoss({NAN, 0.0}, 0), ddsd::ValidationError);
  EXPECT_THROW(ddsd::CrossEntropyLoss({0.0, 0.0}, 2), ddsd::ValidationError);
}

TEST(Head, ZeroHeadBiasGradient) {
  LinearHead h(5);
  auto g = ddsd::Gradient(h, std::vector<double>(5, 1.0), 1);
  EXPECT_EQ(g.bias[0], 0.5);
  EXPECT_EQ(g.bias[1], -0.5);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(g.weights(0, j), 0.5);
    EXPECT_EQ(g.weights(1, j), -0.5);
  }
}

TEST(Head, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const double eps = 1e-4;
  int checks = 0;
  for (int t = 0; t < 100; ++t) {
    std::size_t dim = 1 + rng() % 32;
    LinearHead h = RandomHead(rng, dim, 0.5);
    auto x = RandomVec(rng, dim);
    int label = static_cast<int>(rng() % 2);
    auto g = ddsd::Gradient(h, x, label);
    auto w = Rows(h);
    std::vector<double> b = {h.bias[0], h.bias[1]};
    // One random weight coordinate and one bias per trial.
    std::size_t k = rng() % 2, j = rng() % dim;
    auto wp = w, wm = w;
    wp[k][j] += eps;
    wm[k][j] -= eps;
    double fd = (oracle::HeadLoss(wp, b, x, label) - oracle::HeadLoss(wm, b, x, label)) / (2 * eps);
    EXPECT_TRUE(CloseRel(g.weights(k, j), fd, 1e-5, 1e-9))
        << "w trial " << t << ": " << g.weights(k, j) << " vs " << fd;
    auto bp = b, bm = b;
    bp[k] += eps;
    bm[k] -= eps;
    fd = (oracle::HeadLoss(w, bp, x, label) - oracle::HeadLoss(w, bm, x, label)) / (2 * eps);
    EXPECT_TRUE(CloseRel(g.bias[k], fd, 1e-5, 1e-9)) << "b trial " << t;
    checks += 2;
  }
  EXPECT_EQ(checks, 200);
}

// Loss of an adapted model written with explicit loops.
double OracleAdaptedLoss(const ClassifierModel &m, const std::vector<double> &x, int label) {
  const auto &p = *m.projection;
  const auto &a = p.adapter;
  std::vector<double> h(a.d_out(), 0.0);
  for (std::size_t o = 0; o < a.d_out(); ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.d_in(); ++i) {
      double delta = 0.0;
      for (std::size_t r = 0; r < a.rank; ++r) delta += a.up(o, r) * a.down(r, i);
      acc += (p.base(o, i) + a.alpha / a.rank * delta) * x[i];
    }
    h[o] = acc;
  }
  return oracle::HeadLoss(Rows(m.head), {m.head.bias[0], m.head.bias[1]}, h, label);
}

TEST(Adapter, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const double eps = 1e-4;
  for (int t = 0; t < 30; ++t) {
    std::size_t d_in = 2 + rng() % 12, d_out = 2 + rng() % 8, rank = 1 + rng() % 3;
    ddsd::TrainConfig tc;
    tc.seed = t;
    ClassifierModel m = ddsd::InitialModel(d_in, tc, ddsd::LoraSpec{rank, d_out, 4.0, 0.3});
    m.head = RandomHead(rng, d_out, 0.5);
    for (double &u : m.projection->adapter.up.data) u = 0.3 * RandomVec(rng, 1)[0];
    auto x = RandomVec(rng, d_in);
    int label = static_cast<int>(rng() % 2);
    auto g = ddsd::ParameterGradient(m, x, label);
    auto views = ddsd::ParameterViews(m);
    ASSERT_EQ(g.size(), views.size());
    ASSERT_EQ(g.size(), 2 * d_out + 2 + rank * (d_in + d_out));
    for (int probe = 0; probe < 6; ++probe) {
      std::size_t i = rng() % views.size();
      double saved = *views[i];
      *views[i] = saved + eps;
      double lp = OracleAdaptedLoss(m, x, label);
      *views[i] = saved - eps;
      double lm = OracleAdaptedLoss(m, x, label);
      *views[i] = saved;
      double fd = (lp - lm) / (2 * eps);
      EXPECT_TRUE(CloseRel(g[i], fd, 1e-5, 1e-9))
          << "trial " << t << " param " << i << ": " << g[i] << " vs " << fd;
    }
  }
}

TEST(Adapter, ParameterCounts) {
  EXPECT_EQ(LinearHead(4096).parameter_count(), 8194u);
  EXPECT_EQ(ddsd::LoraParameterCount(8, 4096, 4096), 65536u);
  ddsd::LoraAdapter a(8, 4096, 4096, 16.0);
  EXPECT_EQ(a.parameter_count(), 65536u);
  EXPECT_EQ(a.down.data.size() + a.up.data.size(), 65536u);
  EXPECT_THROW(ddsd::LoraAdapter(0, 4, 4, 1.0), ddsd::ValidationError);
}

TEST(Adapter, ZeroUpIsExactNoOp) {
  std::mt19937_64 rng(4);
  ddsd::Matrix base(6, 9);
  for (double &w : base.data) w = RandomVec(rng, 1)[0];
  ddsd::LoraAdapter a(3, 9, 6, 16.0);
  for (double &w : a.down.data) w = RandomVec(rng, 1)[0];
  ddsd::Matrix eff = ddsd::ApplyLora(base, a);
  EXPECT_EQ(eff, base);  // bit-identical
  ddsd::AdaptedProjection p{base, a};
  auto x = RandomVec(rng, 9);
  EXPECT_EQ(p.Project(x), ddsd::MatVec(base, x));
  // Freshly initialised adapters start as a no-op too.
  ddsd::TrainConfig tc;
  auto m = ddsd::InitialModel(9, tc, ddsd::LoraSpec{3, 6, 16.0, 0.01});
  EXPECT_EQ(m.projection->Project(x), ddsd::MatVec(m.projection->base, x));
  EXPECT_THROW(ddsd::ApplyLora(ddsd::Matrix(5, 9), a), ddsd::ValidationError);
}

TEST(Adapter, RankOneOuterProduct) {
  ddsd::LoraAdapter a(1, 3, 2, 2.0);
  a.down.data = {1.0, 2.0, 3.0};
  a.up.data = {0.5, -1.0};
  ddsd::Matrix base(2, 3);
  auto eff = ddsd::ApplyLora(base, a);
  // scale = alpha / rank = 2
  std::vector<double> want = {1.0, 2.0, 3.0, -2.0, -4.0, -6.0};
  EXPECT_EQ(eff.data, want);
}

std::vector<LabeledEmbedding> Separable(std::mt19937_64 &rng, std::size_t n, std::size_t dim) {
  std::vector<LabeledEmbedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledEmbedding e;
    e.label = static_cast<int>(i % 2);
    e.x = RandomVec(rng, dim);
    e.x[0] = (e.label ? 1.0 : -1.0) * (0.5 + std::abs(e.x[0]));
    out.push_back(e);
  }
  return out;
}

double Accuracy(const ClassifierModel &m, const std::vector<LabeledEmbedding> &d) {
  int ok = 0;
  for (const auto &e : d) ok += ddsd::Binarize(m.Score(e.x)) == e.label;
  return ok / static_cast<double>(d.size());
}

TEST(Train, SeparableReachesPerfectAccuracy) {
  std::mt19937_64 rng(5);
  auto data = Separable(rng, 200, 8);
  ddsd::TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 50;
  auto r = ddsd::Train(data, tc);
  EXPECT_EQ(Accuracy(r.model, data), 1.0);
  ASSERT_EQ(r.loss_trace.size(), 50u);
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(Train, MemorizesSmallSet) {
  std::mt19937_64 rng(6);
  std::vector<LabeledEmbedding> data;
  for (int i = 0; i < 8; ++i) data.push_back({RandomVec(rng, 16), i % 2});
  ddsd::TrainConfig tc;
  tc.learning_rate = 1.0;
  tc.epochs = 300;
  tc.batch_size = 4;
  auto r = ddsd::Train(data, tc);
  EXPECT_EQ(Accuracy(r.model, data), 1.0);
  EXPECT_LT(ddsd::MeanLoss(r.model, data), 0.05);
}

TEST(Train, AdapterModelLearns) {
  std::mt19937_64 rng(7);
  auto data = Separable(rng, 200, 12);
  ddsd::TrainConfig tc;
  tc.learning_rate = 0.02;
  tc.epochs = 40;
  tc.optimizer = ddsd::Optimizer::kMomentumSgd;
  auto r = ddsd::Train(data, tc, ddsd::LoraSpec{2, 8, 4.0, 0.1});
  EXPECT_GE(Accuracy(r.model, data), 0.95);
  // The frozen base is untouched.
  auto init = ddsd::InitialModel(12, tc, ddsd::LoraSpec{2, 8, 4.0, 0.1});
  EXPECT_EQ(r.model.projection->base, init.projection->base);
  EXPECT_NE(r.model.projection->adapter.up, init.projection->adapter.up);
}

TEST(Train, DeterministicForSeed) {
  std::mt19937_64 rng(8);
  auto data = Separable(rng, 64, 6);
  ddsd::TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.epochs = 5;
  tc.seed = 42;
  auto a = ddsd::Train(data, tc), b = ddsd::Train(data, tc);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  tc.seed = 43;
  EXPECT_NE(ddsd::Train(data, tc).model, a.model);
}

TEST(Train, RejectsBadInput) {
  ddsd::TrainConfig tc;
  EXPECT_THROW(ddsd::Train({}, tc), ddsd::ValidationError);
  EXPECT_THROW(ddsd::Train({{{1.0}, 0}, {{1.0, 2.0}, 1}}, tc), ddsd::ValidationError);
  EXPECT_THROW(ddsd::Train({{{1.0}, 3}}, tc), ddsd::ValidationError);
  tc.learning_rate = 0;
  EXPECT_THROW(ddsd::Train({{{1.0}, 0}}, tc), ddsd::ValidationError);
  tc = {};
  tc.warmup_fraction = 1.0;
  EXPECT_THROW(ddsd::Train({{{1.0}, 0}}, tc), ddsd::ValidationError);
}

TEST(Train, DivergenceIsTrainingError) {
  ddsd::TrainConfig tc;
  tc.learning_rate = 1e308;
  tc.epochs = 4;
  std::vector<LabeledEmbedding> data = {{{1e10, -1e10}, 0}, {{-1e10, 1e10}, 1}, {{1e10, 1e10}, 0}};
  EXPECT_THROW(ddsd::Train(data, tc), ddsd::TrainingError);
}

TEST(Checkpoint, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  auto data = Separable(rng, 50, 5);
  ddsd::TrainConfig tc;
  tc.learning_rate = 0.3;
  tc.l2_normalize = true;
  for (bool lora : {false, true}) {
    auto r = lora ? ddsd::Train(data, tc, ddsd::LoraSpec{2, 4, 8.0, 0.05}) : ddsd::Train(data, tc);
    std::string doc = ddsd::SaveCheckpoint(r.model, {{"config", "1-8"}, {"seed", "0"}});
    auto back = ddsd::LoadCheckpoint(doc);
    EXPECT_EQ(back.model, r.model);
    EXPECT_EQ(back.meta.at("config"), "1-8");
    for (const auto &e : data) EXPECT_EQ(back.model.Score(e.x), r.model.Score(e.x));
    EXPECT_EQ(ddsd::SaveCheckpoint(back.model, back.meta), doc);
  }
}

TEST(Checkpoint, MalformedIsParseError) {
  ClassifierModel m;
  m.input_dim = 2;
  m.head = LinearHead(2);
  std::string doc = ddsd::SaveCheckpoint(m);
  EXPECT_THROW(ddsd::LoadCheckpoint("not a checkpoint\n"), ddsd::ParseError);
  EXPECT_THROW(ddsd::LoadCheckpoint(doc.substr(0, doc.size() / 2)), ddsd::ParseError);
  std::string bad = doc;
  bad.replace(bad.find("head_bias 0"), 11, "head_bias x");
  EXPECT_THROW(ddsd::LoadCheckpoint(bad), ddsd::ParseError);
}

TEST(Scoring, BinarizeBoundaryAndMonotonicity) {
  EXPECT_EQ(ddsd::Binarize(0.5), 1);
  EXPECT_EQ(ddsd::Binarize(std::nextafter(0.5, 0.0)), 0);
  EXPECT_EQ(ddsd::Binarize(0.3, 0.3), 1);
  std::mt19937_64 rng(10);
  LinearHead h = RandomHead(rng, 4);
  // Moving x along (w1 - w0) never lowers the score.
  auto x = RandomVec(rng, 4);
  double prev = -1.0;
  for (int s = -20; s <= 20; ++s) {
    std::vector<double> y = x;
    for (std::size_t j = 0; j < 4; ++j) y[j] += 0.1 * s * (h.weights(1, j) - h.weights(0, j));
    double score = ddsd::PredictScore(h, y);
    EXPECT_GE(score, prev);
    prev = score;
  }
}

}  // namespace
