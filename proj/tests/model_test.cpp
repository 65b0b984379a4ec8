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

#include <random>
#include <sstream>

#include "relerm/model.hpp"
#include "relerm/samplers.hpp"
#include "test_support.hpp"

namespace relerm {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

SampledSubgraph pairs_sample(std::vector<Vertex> vertices, std::vector<VertexPair> pos,
                             std::vector<VertexPair> neg) {
  SampledSubgraph s;
  s.vertices = std::move(vertices);
  s.base_vertex_count = s.vertices.size();
  s.positive_pairs = std::move(pos);
  s.negative_pairs = std::move(neg);
  return s;
}

void set_row(std::span<double> row, std::initializer_list<double> values) {
  std::copy(values.begin(), values.end(), row.begin());
}

TEST(EdgeLoss, ZeroEmbeddingsGiveLn2PerPair) {
  ParamStore p(5, 3);
  auto s = pairs_sample({0, 1, 2, 3}, {{0, 1}, {1, 2}, {0, 1}}, {{0, 3}, {2, 3}});
  EXPECT_NEAR(edge_loss(s, p, {}), 5 * kLn2, 1e-12);
}

TEST(EdgeLoss, ClippedAtLargeLogits) {
  ParamStore p(2, 1);
  p.embedding(0)[0] = 1e3;
  p.embedding(1)[0] = 1e3;
  LossConfig c;
  auto pos = pairs_sample({0, 1}, {{0, 1}}, {});
  EXPECT_NEAR(edge_loss(pos, p, c), -std::log1p(-c.eps), 1e-15);
  auto neg = pairs_sample({0, 1}, {}, {{0, 1}});
  EXPECT_NEAR(edge_loss(neg, p, c), -std::log(c.eps), 1e-9);
  SparseGradient g = gradient(pos, {}, p, c);
  for (double x : g.vertex_values) EXPECT_EQ(x, 0.0);
}

TEST(EdgeLoss, HandEvaluatedExample) {
  ParamStore p(3, 2);
  set_row(p.embedding(0), {1, 0});
  set_row(p.embedding(1), {1, 0});
  set_row(p.embedding(2), {0, 1});
  auto s = pairs_sample({0, 1, 2}, {{0, 1}, {0, 1}}, {{0, 2}});
  const double expected = -2 * std::log(1 / (1 + std::exp(-1.0))) - std::log(0.5);
  EXPECT_NEAR(expected, 1.3197, 5e-5);
  EXPECT_NEAR(edge_loss(s, p, {}), expected, 1e-12);
}

TEST(EdgeLoss, SymmetricInPairOrientation) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    ParamStore p = ParamStore::initialized(6, 4, 0, 0, t);
    for (double& x : p.flat()) x *= 100;
    auto s = pairs_sample({0, 1, 2, 3, 4, 5}, {{0, 1}, {2, 3}, {5, 4}}, {{1, 4}, {3, 0}});
    auto r = s;
    for (auto& pr : r.positive_pairs) pr = {pr.v, pr.u};
    for (auto& pr : r.negative_pairs) pr = {pr.v, pr.u};
    EXPECT_EQ(edge_loss(s, p, {}), edge_loss(r, p, {}));
  }
}

TEST(EdgeLoss, BoundedByPairCountTimesLogEps) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z(0.0, 30.0);
  for (int t = 0; t < 100; ++t) {
    ParamStore p(4, 3);
    for (double& x : p.flat()) x = z(gen);
    auto s = pairs_sample({0, 1, 2, 3}, {{0, 1}, {1, 2}, {0, 1}}, {{0, 3}, {2, 3}});
    // 1 - (1 - eps) rounds slightly below eps.
    EXPECT_LE(edge_loss(s, p, {}), 5 * -std::log(1e-7) + 1e-6);
  }
}

TEST(EdgeLoss, NonFiniteEmbeddingIsNumericError) {
  ParamStore p(2, 2);
  p.embedding(1)[0] = std::numeric_limits<double>::quiet_NaN();
  auto s = pairs_sample({0, 1}, {{0, 1}}, {});
  EXPECT_THROW(edge_loss(s, p, {}), NumericError);
  EXPECT_THROW(gradient(s, {}, p, {}), NumericError);
}

TEST(LabelLoss, ZeroParametersGiveLn2PerObservedLabel) {
  ParamStore p(4, 3, 2);
  LabelTable labels(4, 2);
  labels.set(0, 1);
  labels.set_observed(3, false);
  auto s = pairs_sample({0, 1, 2, 3}, {{0, 1}}, {});
  EXPECT_NEAR(label_loss(s, labels, p, {}), 3 * 2 * kLn2, 1e-12);
}

TEST(LabelLoss, NoObservedVerticesGiveZero) {
  ParamStore p(3, 2, 1);
  LabelTable labels(3, 1);
  for (Vertex v = 0; v < 3; ++v) labels.set_observed(v, false);
  auto s = pairs_sample({0, 1, 2}, {{0, 1}}, {});
  EXPECT_EQ(label_loss(s, labels, p, {}), 0.0);
}

TEST(LabelLoss, SingleVertexExample) {
  ParamStore p(1, 1, 1);
  p.embedding(0)[0] = 1.0;
  p.weights(0)[0] = std::log(0.8 / 0.2);
  LabelTable labels(1, 1);
  labels.set(0, 0);
  auto s = pairs_sample({0}, {}, {});
  EXPECT_NEAR(label_loss(s, labels, p, {}), -std::log(0.8), 1e-12);
  EXPECT_NEAR(-std::log(0.8), 0.2231, 5e-5);
}

TEST(LabelLoss, OnlyBaseVerticesCount) {
  ParamStore p(3, 2, 1);
  LabelTable labels(3, 1);
  auto s = pairs_sample({0, 1, 2}, {{0, 1}}, {{0, 2}});
  s.base_vertex_count = 2;  // vertex 2 came from negative sampling
  EXPECT_NEAR(label_loss(s, labels, p, {}), 2 * kLn2, 1e-12);
}

TEST(CombinedLoss, MixesAffinelyInQ) {
  ParamStore p = ParamStore::initialized(4, 3, 2, 0, 9);
  for (double& x : p.flat()) x += 0.3;
  LabelTable labels(4, 2);
  labels.set(1, 0);
  labels.set(2, 1);
  auto s = pairs_sample({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {{0, 3}});
  LossConfig c;
  const double edge = edge_loss(s, p, c);
  const double label = label_loss(s, labels, p, c);
  c.q = 0.0;
  EXPECT_DOUBLE_EQ(combined_loss(s, labels, p, c), edge);
  c.q = 1.0;
  EXPECT_DOUBLE_EQ(combined_loss(s, labels, p, c), label);
  c.q = 0.001;
  EXPECT_NEAR(combined_loss(s, labels, p, c), 0.001 * label + 0.999 * edge, 1e-12);
  for (double q : {0.1, 0.37, 0.8}) {
    c.q = q;
    EXPECT_NEAR(combined_loss(s, labels, p, c), q * label + (1 - q) * edge, 1e-12);
  }
}

TEST(CategoryEmbedding, SumsCategories) {
  ParamStore p(3, 2, 0, 2);
  set_row(p.category(0), {1, 2});
  auto single = CategoryMap::from_memberships(3, 2, {{0, 0}});
  EXPECT_EQ(category_vertex_embedding(0, single, p), (std::vector<double>{1, 2}));
  set_row(p.category(0), {1, 0});
  set_row(p.category(1), {0, 1});
  auto both = CategoryMap::from_memberships(3, 2, {{0, 0}, {0, 1}});
  EXPECT_EQ(category_vertex_embedding(0, both, p), (std::vector<double>{1, 1}));
  EXPECT_EQ(category_vertex_embedding(2, both, p), (std::vector<double>{0, 0}));
}

TEST(Gradient, BiasAtZeroParameters) {
  ParamStore p(4, 3, 2);
  LabelTable labels(4, 2);
  labels.set(0, 0);
  labels.set(1, 0);
  labels.set(2, 1);
  labels.set_observed(3, false);
  auto s = pairs_sample({0, 1, 2, 3}, {{0, 1}, {1, 2}}, {{0, 3}});
  LossConfig c;
  c.mode = LossMode::kNodeClassification;
  c.q = 1.0;
  auto g = gradient(s, {&labels, nullptr}, p, c);
  ASSERT_EQ(g.global.size(), 2u * 3u + 2u);
  // sum over observed vertices 0..2 of (0.5 - l).
  EXPECT_NEAR(g.global[6], (0.5 - 1) * 2 + 0.5, 1e-15);
  EXPECT_NEAR(g.global[7], 0.5 * 2 + (0.5 - 1), 1e-15);
}

TEST(Gradient, OnlyTouchedEntries) {
  ParamStore p = ParamStore::initialized(10, 3, 0, 0, 1);
  auto s = pairs_sample({2, 5}, {{2, 5}}, {});
  auto g = gradient(s, {}, p, {});
  std::vector<Vertex> touched = g.vertices;
  std::sort(touched.begin(), touched.end());
  EXPECT_EQ(touched, (std::vector<Vertex>{2, 5}));
  EXPECT_TRUE(g.global.empty());
}

// Central finite differences against the analytic gradient, over random
// samples and parameters for each loss mode.
struct FdCase {
  LossMode mode;
  const char* name;
};

class FiniteDifference : public ::testing::TestWithParam<FdCase> {};

TEST_P(FiniteDifference, MatchesAnalyticGradient) {
  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-4;
  // Denominator floor: a relative error is meaningless for coordinates whose
  // true value is at rounding level.
  constexpr double kFloor = 1e-3;
  const LossMode mode = GetParam().mode;
  Graph g = testing::load_fixture("bridge7.txt");
  const std::size_t V = g.vertex_count(), d = 3, L = 2, C = 3;
  std::mt19937_64 gen(17);
  std::normal_distribution<double> z(0.0, 0.6);
  std::size_t instances = 0;
  for (int t = 0; instances < 120; ++t) {
    SamplerConfig sc;
    sc.algorithm = static_cast<SamplerAlgorithm>(t % 4);
    sc.negative = static_cast<NegativeMode>((t / 4) % 3);
    sc.walk_length = 4;
    sc.window = 3;
    sc.retention = 0.6;
    sc.edge_count = 3;
    sc.negatives_per_vertex = 2;
    Rng rng(t);
    auto s = draw(g, sc, rng);
    if (s.positive_pairs.empty() && s.negative_pairs.empty()) continue;

    ParamStore p(V, d, mode == LossMode::kNodeClassification ? L : 0,
                 mode == LossMode::kCategoryEmbedding ? C : 0);
    for (double& x : p.flat()) x = z(gen);
    LabelTable labels(V, L);
    std::vector<std::pair<Vertex, std::uint32_t>> members;
    for (Vertex v = 0; v < V; ++v) {
      for (std::size_t j = 0; j < L; ++j) labels.set(v, j, gen() % 2);
      labels.set_observed(v, gen() % 4 != 0);
      for (std::uint32_t c = 0; c < C; ++c) {
        if (gen() % 2) members.emplace_back(v, c);
      }
    }
    auto cats = CategoryMap::from_memberships(V, C, members);
    LossConfig lc;
    lc.mode = mode;
    lc.q = mode == LossMode::kNodeClassification ? std::uniform_real_distribution<>(0.05, 0.95)(gen)
                                                   : 0.0;
    Annotations ann{&labels, &cats};

    const auto analytic = gradient(s, ann, p, lc).to_dense(p);
    for (std::size_t i = 0; i < p.flat().size(); ++i) {
      ParamStore plus = p, minus = p;
      plus.flat()[i] += kStep;
      minus.flat()[i] -= kStep;
      const double numeric = (loss(s, ann, plus, lc) - loss(s, ann, minus, lc)) / (2 * kStep);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kFloor});
      ASSERT_LT(std::abs(analytic[i] - numeric) / denom, kRelTol)
          << GetParam().name << " instance " << t << " coordinate " << i << " analytic "
          << analytic[i] << " numeric " << numeric;
    }
    ++instances;
  }
  EXPECT_GE(instances, 100u);
}

INSTANTIATE_TEST_SUITE_P(Modes, FiniteDifference,
                         ::testing::Values(FdCase{LossMode::kEdgeOnly, "edge_only"},
                                           FdCase{LossMode::kNodeClassification,
                                                  "node_classification"},
                                           FdCase{LossMode::kCategoryEmbedding,
                                                  "category_embedding"}),
                         [](const auto& info) { return std::string(info.param.name); });

// One pair seen three times as positive and once as negative: the loss is
// minimized where sigmoid(<a, b>) = 3/4. Gradient descent converges there.
TEST(Gradient, VanishesAtToyMinimum) {
  ParamStore p(2, 2);
  set_row(p.embedding(0), {0.3, -0.2});
  set_row(p.embedding(1), {0.5, 0.1});
  auto s = pairs_sample({0, 1}, {{0, 1}, {0, 1}, {0, 1}}, {{0, 1}});
  double norm = 1.0;
  for (int it = 0; it < 20000 && norm > 1e-10; ++it) {
    auto g = gradient(s, {}, p, {});
    apply_gradient(p, g, 0.1);
    norm = 0.0;
    for (double x : g.vertex_values) norm += x * x;
    norm = std::sqrt(norm);
  }
  EXPECT_LT(norm, 1e-8);
  const double x = detail::dot(p.embedding(0), p.embedding(1));
  EXPECT_NEAR(x, std::log(3.0), 1e-6);
}

TEST(ParamStore, InitializationRangeAndKeying) {
  const std::size_t d = 8;
  auto p = ParamStore::initialized(50, d, 3, 2, 42);
  for (Vertex v = 0; v < 50; ++v) {
    for (double x : p.embedding(v)) {
      EXPECT_GE(x, -0.5 / d);
      EXPECT_LE(x, 0.5 / d);
    }
  }
  for (double x : p.global()) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(p.all_finite());
  // Keyed init: vertex 3 keyed as 103 in one store equals vertex 0 keyed as 103 in another.
  std::vector<std::uint64_t> a{100, 101, 102, 103}, b{103};
  auto pa = ParamStore::initialized(4, d, 0, 0, 7, a);
  auto pb = ParamStore::initialized(1, d, 0, 0, 7, b);
  EXPECT_TRUE(std::equal(pa.embedding(3).begin(), pa.embedding(3).end(), pb.embedding(0).begin()));
  // Different seeds differ.
  EXPECT_NE(ParamStore::initialized(4, d, 0, 0, 1), ParamStore::initialized(4, d, 0, 0, 2));
}

TEST(ParamStore, SgdTouchesOnlyGradientEntries) {
  ParamStore p = ParamStore::initialized(5, 2, 1, 0, 3);
  const ParamStore before = p;
  SparseGradient g;
  g.dim = 2;
  apply_gradient(p, g, 0.5);
  EXPECT_EQ(p, before);
  g.vertices = {3};
  g.vertex_values = {2.0, 0.0};
  apply_gradient(p, g, 0.5);
  EXPECT_DOUBLE_EQ(p.embedding(3)[0], before.embedding(3)[0] - 1.0);
  EXPECT_EQ(p.embedding(3)[1], before.embedding(3)[1]);
  EXPECT_TRUE(std::equal(p.embedding(2).begin(), p.embedding(2).end(), before.embedding(2).begin()));
}

TEST(Checkpoint, RoundTripAndCorruption) {
  ParamStore p = ParamStore::initialized(7, 4, 2, 3, 99);
  p.bias(1) = -1.25;
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_checkpoint(buf, p);
  const std::string bytes = buf.str();
  auto q = read_checkpoint(buf);
  EXPECT_EQ(q, p);
  EXPECT_EQ(q.init_seed(), 99u);
  std::string bad = bytes;
  bad[1] = '?';
  std::istringstream a(bad);
  EXPECT_THROW(read_checkpoint(a), FormatError);
  std::istringstream b(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_checkpoint(b), FormatError);
}

TEST(Export, TabSeparatedRows) {
  ParamStore p(2, 2);
  set_row(p.embedding(0), {0.5, -1});
  set_row(p.embedding(1), {2, 0.25});
  std::ostringstream out;
  std::vector<std::uint64_t> ids{10, 20};
  export_embeddings(out, p, ids);
  EXPECT_EQ(out.str(), "10\t0.5\t-1\n20\t2\t0.25\n");
}

TEST(LossConfig, Violations) {
  LossConfig c;
  EXPECT_TRUE(c.violations().empty());
  c.q = 1.5;
  c.eps = 0.5;
  EXPECT_EQ(c.violations().size(), 2u);
}

}  // namespace
}  // namespace relerm
