// Copyright 2026 The relerm Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <map>

#include "relerm/trainer.hpp"
#include "test_support.hpp"

namespace relerm {
namespace {

using testing::k2;
using testing::path3;
using testing::triangle;

constexpr double kLn2 = 0.69314718055994530942;

SamplerConfig psampling(double p) {
  SamplerConfig c;
  c.algorithm = SamplerAlgorithm::kPSampling;
  c.retention = p;
  c.negative = NegativeMode::kInduced;
  return c;
}

SamplerConfig walk_induced(std::size_t steps, NegativeMode neg = NegativeMode::kNone) {
  SamplerConfig c;
  c.algorithm = SamplerAlgorithm::kRwInduced;
  c.walk_length = steps;
  c.negative = neg;
  return c;
}

TEST(EstimateRisk, DeterministicSamplerHasZeroError) {
  ParamStore p(3, 2);
  Rng rng(1);
  auto est = estimate_risk(triangle(), {}, p, psampling(1.0), {}, 100, rng);
  EXPECT_NEAR(est.mean, 3 * kLn2, 1e-12);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_EQ(est.n_samples, 100u);
}

TEST(EstimateRisk, SingleDrawIsThatDrawsLoss) {
  ParamStore p = ParamStore::initialized(7, 3, 0, 0, 4);
  Graph g = testing::load_fixture("bridge7.txt");
  SamplerConfig c = psampling(0.6);
  Rng a(5), b(5);
  auto est = estimate_risk(g, {}, p, c, {}, 1, a);
  EXPECT_EQ(est.mean, loss(draw(g, c, b), {}, p, {}));
  EXPECT_EQ(est.std_error, 0.0);
}

// Independent re-derivation of the 3-path subset table: the count of pairs in
// the p-sampled subgraph (with induced negatives) for each retention subset.
TEST(ExactRisk, PathPSamplingSubsetTable) {
  const int pair_count[8] = {
      0,  // {}
      0,  // {0}: isolated
      0,  // {1}
      1,  // {0,1}
      0,  // {2}
      0,  // {0,2}: both isolated, deleted
      1,  // {1,2}
      3,  // {0,1,2}
  };
  double expected_pairs = 0.0;
  for (int m = 0; m < 8; ++m) expected_pairs += pair_count[m] / 8.0;
  EXPECT_DOUBLE_EQ(expected_pairs, 5.0 / 8.0);
  ParamStore p(3, 2);
  const double exact = exact_risk_psample(path3(), {}, p, 0.5, {});
  EXPECT_NEAR(exact, 5.0 / 8.0 * kLn2, 1e-15);
  EXPECT_NEAR(exact, 0.4332, 5e-5);
  Rng rng(6);
  auto est = estimate_risk(path3(), {}, p, psampling(0.5), {}, 200000, rng);
  EXPECT_LT(std::abs(est.mean - exact), 3 * est.std_error);
}

TEST(ExactRisk, PSamplingExtremes) {
  ParamStore p = ParamStore::initialized(5, 2, 0, 0, 3);
  Graph g = Graph::from_pairs(5, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(exact_risk_psample(g, {}, p, 0.0, {}), 0.0);
  Rng rng(0);
  EXPECT_NEAR(exact_risk_psample(g, {}, p, 1.0, {}), loss(p_sample(g, 1.0, rng), {}, p, {}),
              1e-15);
}

TEST(ExactRisk, RefusesLargeGraphs) {
  std::vector<VertexPair> edges;
  for (Vertex v = 0; v + 1 < 21; ++v) edges.push_back({v, v + 1});
  Graph g = Graph::from_pairs(21, edges);
  ParamStore p(21, 2);
  EXPECT_THROW(exact_risk_psample(g, {}, p, 0.5, {}), RefusalError);
  EXPECT_THROW(exact_risk_walk(g, {}, p, walk_induced(40), {}), RefusalError);
  SamplerConfig uni = psampling(0.5);
  uni.negative = NegativeMode::kUnigram;
  EXPECT_THROW(exact_risk(path3(), {}, ParamStore(3, 2), uni, {}), RefusalError);
}

TEST(ExactRisk, WalkExamples) {
  ParamStore p2(2, 2);
  for (std::size_t r : {1u, 2u, 5u}) {
    EXPECT_NEAR(exact_risk_walk(k2(), {}, p2, walk_induced(r), {}), kLn2, 1e-12);
  }
  ParamStore p3(3, 2);
  EXPECT_NEAR(exact_risk_walk(path3(), {}, p3, walk_induced(1), {}), kLn2, 1e-12);
}

TEST(ExactRisk, PathWalkProbabilities) {
  std::map<std::vector<Vertex>, double> probs;
  for_each_walk_outcome(path3(), walk_induced(1), [&](double prob, const SampledSubgraph& s) {
    probs[s.vertices] += prob;
  });
  EXPECT_NEAR((probs[{0, 1}]), 1.0 / 3, 1e-15);
  EXPECT_NEAR((probs[{1, 0}]), 1.0 / 6, 1e-15);
  EXPECT_NEAR((probs[{1, 2}]), 1.0 / 6, 1e-15);
  EXPECT_NEAR((probs[{2, 1}]), 1.0 / 3, 1e-15);
}

TEST(ExactRisk, TriangleWalkMatchesMonteCarlo) {
  ParamStore p = ParamStore::initialized(3, 2, 0, 0, 8);
  for (double& x : p.flat()) x *= 20;
  const auto cfg = walk_induced(2, NegativeMode::kInduced);
  const double exact = exact_risk_walk(triangle(), {}, p, cfg, {});
  Rng rng(9);
  auto est = estimate_risk(triangle(), {}, p, cfg, {}, 1000000, rng);
  EXPECT_LT(std::abs(est.mean - exact), 3 * est.std_error);
}

TEST(Unbiasedness, PathPSampling) {
  ParamStore p = ParamStore::initialized(3, 2, 0, 0, 10);
  for (double& x : p.flat()) x *= 40;
  Rng rng(11);
  auto r = check_unbiasedness(path3(), {}, p, psampling(0.5), {}, 1000000, rng);
  EXPECT_TRUE(r.passes(4.0)) << "max |z| " << r.max_abs_z;
}

TEST(Unbiasedness, DeterministicSamplerExact) {
  ParamStore p = ParamStore::initialized(3, 2, 0, 0, 12);
  Rng rng(13);
  auto r = check_unbiasedness(triangle(), {}, p, psampling(1.0), {}, 50, rng);
  EXPECT_EQ(r.max_abs_z, 0.0);
  for (std::size_t k = 0; k < r.exact.size(); ++k) EXPECT_NEAR(r.mean[k], r.exact[k], 1e-15);
}

TEST(Unbiasedness, TriangleRwInduced) {
  ParamStore p = ParamStore::initialized(3, 2, 0, 0, 14);
  for (double& x : p.flat()) x *= 40;
  Rng rng(15);
  auto r = check_unbiasedness(triangle(), {}, p, walk_induced(2, NegativeMode::kInduced), {},
                              1000000, rng);
  EXPECT_TRUE(r.passes(4.0)) << "max |z| " << r.max_abs_z;
}

TEST(Sgd, StepArithmetic) {
  ParamStore p = ParamStore::initialized(3, 2, 0, 0, 1);
  const ParamStore before = p;
  SparseGradient zero;
  zero.dim = 2;
  sgd_step(p, zero, 0.3);
  EXPECT_EQ(p, before);
  SparseGradient one;
  one.dim = 2;
  one.vertices = {1};
  one.vertex_values = {0.0, 2.5};
  sgd_step(p, one, 0.1);
  EXPECT_DOUBLE_EQ(p.embedding(1)[1], before.embedding(1)[1] - 0.25);
}

// Convex instance: embeddings fixed, one vertex, label loss only.
TEST(Sgd, ConvexLossNonIncreasing) {
  ParamStore p(1, 2, 1);
  p.embedding(0)[0] = 1.0;
  p.embedding(0)[1] = -0.5;
  LabelTable labels(1, 1);
  labels.set(0, 0);
  SampledSubgraph s;
  s.vertices = {0};
  s.base_vertex_count = 1;
  LossConfig c;
  c.mode = LossMode::kNodeClassification;
  c.q = 1.0;
  double prev = loss(s, {&labels, nullptr}, p, c);
  for (int i = 0; i < 20; ++i) {
    auto g = gradient(s, {&labels, nullptr}, p, c);
    g.vertices.clear();
    g.vertex_values.clear();
    sgd_step(p, g, 0.05);
    const double now = loss(s, {&labels, nullptr}, p, c);
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(Train, K2LearnsThePositivePair) {
  TrainConfig c;
  c.sampler = walk_induced(1);
  c.sampler.algorithm = SamplerAlgorithm::kUniformEdge;
  c.sampler.edge_count = 1;
  c.sampler.negative = NegativeMode::kNone;
  c.dim = 4;
  c.steps = 500;
  c.learning_rate = {LearningRate::Kind::kConstant, 0.1, 0.1};
  c.seed = 3;
  auto r = train(k2(), {}, c);
  EXPECT_GE(detail::sigmoid(detail::dot(r.params.embedding(0), r.params.embedding(1))), 0.9);
}

TEST(Train, LogisticOnlyOnSeparableLabels) {
  // Embeddings preset and frozen; labels separable by the first coordinate.
  const std::size_t V = 8;
  std::vector<VertexPair> edges;
  for (Vertex v = 0; v + 1 < V; ++v) edges.push_back({v, v + 1});
  Graph g = Graph::from_pairs(V, edges);
  LabelTable labels(V, 1);
  ParamStore init(V, 2, 1);
  for (Vertex v = 0; v < V; ++v) {
    const bool on = v % 2 == 0;
    init.embedding(v)[0] = on ? 1.0 : -1.0;
    init.embedding(v)[1] = 0.1 * v;
    labels.set(v, 0, on);
  }
  TrainConfig c;
  c.sampler = psampling(1.0);
  c.loss.mode = LossMode::kNodeClassification;
  c.loss.q = 1.0;
  c.dim = 2;
  c.steps = 2000;
  c.learning_rate = {LearningRate::Kind::kConstant, 0.05, 0.05};
  c.train_embeddings = false;
  c.eval_every = 500;
  c.eval_samples = 1;
  c.seed = 4;
  auto r = train(g, {&labels, nullptr}, c, init);
  SampledSubgraph all;
  for (Vertex v = 0; v < V; ++v) all.vertices.push_back(v);
  all.base_vertex_count = V;
  EXPECT_LT(label_loss(all, labels, r.params, c.loss), 0.05);
  for (Vertex v = 0; v < V; ++v) {
    EXPECT_TRUE(std::equal(r.params.embedding(v).begin(), r.params.embedding(v).end(),
                           init.embedding(v).begin()));
  }
  // Deterministic sampler and convex loss: the trace never increases.
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].risk_mean, r.trace[i - 1].risk_mean + 1e-12);
  }
}

TEST(Train, ZeroStepsReturnsInitialization) {
  TrainConfig c;
  c.sampler = psampling(0.5);
  c.dim = 4;
  c.steps = 0;
  c.seed = 77;
  Graph g = testing::load_fixture("bridge7.txt");
  auto r = train(g, {}, c);
  EXPECT_EQ(r.params, ParamStore::initialized(g.vertex_count(), 4, 0, 0, 77));
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].step, 0u);
}

TEST(Train, TraceSchedule) {
  TrainConfig c;
  c.sampler = psampling(0.5);
  c.dim = 4;
  c.steps = 95;
  c.eval_every = 30;
  c.seed = 5;
  auto r = train(testing::load_fixture("bridge7.txt"), {}, c);
  std::vector<std::size_t> steps;
  for (auto& t : r.trace) steps.push_back(t.step);
  EXPECT_EQ(steps, (std::vector<std::size_t>{0, 30, 60, 90, 95}));
}

TEST(Train, BitIdenticalAcrossRunsAndWorkerCounts) {
  Graph g = testing::load_fixture("planted60.txt");
  TrainConfig c;
  c.sampler = psampling(0.2);
  c.sampler.negative = NegativeMode::kUnigram;
  c.dim = 8;
  c.steps = 400;
  c.eval_every = 100;
  c.seed = 6;
  auto a = train(g, {}, c);
  auto b = train(g, {}, c);
  EXPECT_EQ(a.params, b.params);
  c.workers = 3;
  auto m = train(g, {}, c);
  EXPECT_EQ(a.params, m.params);
  ASSERT_EQ(a.trace.size(), m.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].risk_mean, m.trace[i].risk_mean);
  }
}

TEST(Train, LockFreeModeRunsAndReducesRisk) {
  Graph g = testing::load_fixture("planted60.txt");
  TrainConfig c;
  c.sampler = psampling(0.2);
  c.sampler.negative = NegativeMode::kUnigram;
  c.dim = 8;
  c.steps = 2000;
  c.eval_samples = 200;
  c.seed = 7;
  c.workers = 2;
  c.lock_free = true;
  auto r = train(g, {}, c);
  EXPECT_TRUE(r.params.all_finite());
  EXPECT_LT(r.trace.back().risk_mean, r.trace.front().risk_mean);
}

TEST(Train, DivergenceAborts) {
  TrainConfig c;
  c.sampler = psampling(1.0);
  c.dim = 2;
  c.steps = 50;
  c.learning_rate = {LearningRate::Kind::kConstant, 1e300, 1e300};
  c.eval_every = 1;
  c.seed = 8;
  ParamStore init = ParamStore::initialized(3, 2, 0, 0, 8);
  for (double& x : init.flat()) x = 1.0;
  EXPECT_THROW(train(triangle(), {}, c, init), DivergenceError);
}

TEST(Train, InvalidConfigListsViolations) {
  TrainConfig c;
  c.learning_rate.start = 0.0;
  c.dim = 0;
  c.sampler.retention = 2.0;
  try {
    train(triangle(), {}, c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.violations().size(), 3u);
  }
}

TEST(LearningRate, LinearDecay) {
  LearningRate lr;
  EXPECT_DOUBLE_EQ(lr.at(0, 100), 0.025);
  EXPECT_NEAR(lr.at(100, 100), 1e-4, 1e-18);
  EXPECT_NEAR(lr.at(50, 100), (0.025 + 1e-4) / 2, 1e-15);
}

}  // namespace
}  // namespace relerm
