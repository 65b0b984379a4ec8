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

// Semi-supervised node classification protocols: label censoring, two-stage
// (embeddings, then a frozen-embedding logistic regression) and simultaneous
// (one joint loss) training, and macro-F1 scoring.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "relerm/error.hpp"
#include "relerm/graph.hpp"
#include "relerm/model.hpp"
#include "relerm/random.hpp"
#include "relerm/samplers.hpp"
#include "relerm/trainer.hpp"

namespace relerm {

enum class SplitScheme { kUniformVertex, kPSampling, kRandomWalk };

inline std::string_view to_string(SplitScheme s) {
  switch (s) {
    case SplitScheme::kUniformVertex: return "uniform";
    case SplitScheme::kPSampling: return "p_sampling";
    case SplitScheme::kRandomWalk: return "random_walk";
  }
  return "?";
}
inline std::optional<SplitScheme> parse_split_scheme(std::string_view s) {
  for (auto v : {SplitScheme::kUniformVertex, SplitScheme::kPSampling, SplitScheme::kRandomWalk}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct Split {
  std::vector<Vertex> train;  // ascending
  std::vector<Vertex> test;   // ascending
  SplitScheme scheme = SplitScheme::kUniformVertex;
};

namespace detail {

// Expected number of surviving vertices of one p-sampling draw.
inline double expected_psample_size(const Graph& g, double p) {
  double total = 0.0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    total += p * (1.0 - std::pow(1.0 - p, static_cast<double>(g.degree(v))));
  }
  return total;
}

inline Split complete_split(const Graph& g, std::vector<Vertex> test, SplitScheme scheme) {
  std::sort(test.begin(), test.end());
  test.erase(std::unique(test.begin(), test.end()), test.end());
  Split s;
  s.scheme = scheme;
  std::vector<std::uint8_t> in_test(g.vertex_count(), 0);
  for (Vertex v : test) in_test[v] = 1;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (!in_test[v]) s.train.push_back(v);
  }
  s.test = std::move(test);
  return s;
}

}  // namespace detail

/// Draws a test set of about fraction * V vertices by the given scheme; all
/// remaining vertices form the training set.
///  - uniform: uniform without replacement, exactly round(fraction * V);
///  - p_sampling: survivors of one p-sampling draw, p chosen so the expected
///    survivor count matches the target;
///  - random_walk: distinct vertices of a walk extended until the target is
///    reached (restarting from an unvisited vertex when the walk stalls).
inline Split make_split(const Graph& g, double fraction, SplitScheme scheme, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("invalid_argument", "test fraction must lie in [0,1]");
  }
  const std::size_t n = g.vertex_count();
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<Vertex> test;
  if (target == 0) return detail::complete_split(g, {}, scheme);
  switch (scheme) {
    case SplitScheme::kUniformVertex: {
      std::vector<Vertex> order(n);
      std::iota(order.begin(), order.end(), Vertex{0});
      for (std::size_t i = 0; i < target; ++i) {
        std::swap(order[i], order[i + rng.index(n - i)]);
      }
      test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
      break;
    }
    case SplitScheme::kPSampling: {
      double lo = 0.0, hi = 1.0;
      if (detail::expected_psample_size(g, 1.0) <= static_cast<double>(target)) {
        lo = 1.0;
      } else {
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (detail::expected_psample_size(g, mid) < static_cast<double>(target) ? lo : hi) = mid;
        }
      }
      auto draw_result = p_sample(g, hi > lo ? 0.5 * (lo + hi) : lo, rng);
      test = draw_result.vertices;
      break;
    }
    case SplitScheme::kRandomWalk: {
      std::size_t reachable = 0;
      for (Vertex v = 0; v < n; ++v) reachable += g.degree(v) > 0;
      const std::size_t goal = std::min(target, reachable);
      std::vector<std::uint8_t> seen(n, 0);
      Vertex at = detail::draw_walk_start(g, WalkStart::kUniformVertex, rng);
      std::size_t stall = 0;
      const std::size_t stall_limit = 10 * n + 100;
      seen[at] = 1;
      test.push_back(at);
      while (test.size() < goal) {
        if (stall > stall_limit) {
          std::vector<Vertex> fresh;
          for (Vertex v = 0; v < n; ++v) {
            if (!seen[v] && g.degree(v) > 0) fresh.push_back(v);
          }
          at = fresh[rng.index(fresh.size())];
          stall = 0;
        } else {
          auto row = g.neighbors(at);
          at = row[rng.index(row.size())];
          ++stall;
        }
        if (!seen[at]) {
          seen[at] = 1;
          test.push_back(at);
          stall = 0;
        }
      }
      break;
    }
  }
  return detail::complete_split(g, std::move(test), scheme);
}

/// Mean over labels of the per-label F1 on the test vertices; a label with
/// precision + recall = 0 scores 0.
inline double macro_f1(const LabelTable& predicted, const LabelTable& truth,
                       std::span<const Vertex> test) {
  const std::size_t L = truth.label_dim();
  if (L == 0) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (Vertex v : test) {
      const bool p = predicted.has(v, j), t = truth.has(v, j);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    if (tp > 0) total += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return total / static_cast<double>(L);
}

/// Copy of `labels` with the test vertices' labels marked unobserved.
inline LabelTable censor(const LabelTable& labels, const Split& split) {
  LabelTable out = labels;
  for (Vertex v : split.test) out.set_observed(v, false);
  return out;
}

enum class PredictionMode {
  kThreshold,  // label on iff probability > 0.5
  kTopK,       // the vertex's true label count is known; take the top k
};

struct LogisticFit {
  double l2 = 1.0;
  std::size_t iterations = 25;
};

/// Fits the label predictor (weights, bias) of `params` by per-label
/// L2-regularized logistic regression on `vertices` with embeddings frozen.
/// Newton's method; the bias is not penalized.
inline void fit_logistic(ParamStore& params, const LabelTable& labels,
                         std::span<const Vertex> vertices, const LogisticFit& fit) {
  const std::size_t d = params.dim();
  const std::size_t L = labels.label_dim();
  if (params.label_dim() != L) {
    throw Error("invalid_argument", "parameter store and labels disagree on label_dim");
  }
  if (vertices.empty() || fit.iterations == 0) return;
  const auto m = static_cast<Eigen::Index>(vertices.size());
  const auto cols = static_cast<Eigen::Index>(d + 1);
  Eigen::MatrixXd X(m, cols);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto row = params.embedding(vertices[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < d; ++k) X(i, static_cast<Eigen::Index>(k)) = row[k];
    X(i, cols - 1) = 1.0;
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(cols, fit.l2);
  penalty(cols - 1) = 1e-10;
  for (std::size_t j = 0; j < L; ++j) {
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      y(i) = labels.has(vertices[static_cast<std::size_t>(i)], j) ? 1.0 : 0.0;
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
    for (std::size_t k = 0; k < d; ++k) beta(static_cast<Eigen::Index>(k)) = params.weights(j)[k];
    beta(cols - 1) = params.bias(j);
    for (std::size_t it = 0; it < fit.iterations; ++it) {
      Eigen::VectorXd z = X * beta;
      Eigen::VectorXd f = z.unaryExpr([](double x) { return detail::sigmoid(x); });
      Eigen::VectorXd w = f.cwiseProduct(Eigen::VectorXd::Ones(m) - f).cwiseMax(1e-12);
      Eigen::VectorXd grad = X.transpose() * (f - y) + penalty.cwiseProduct(beta);
      Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
      H.diagonal() += penalty;
      Eigen::VectorXd step = H.ldlt().solve(grad);
      if (!step.allFinite()) throw NumericError("logistic fit produced a non-finite step");
      beta -= step;
      if (step.norm() < 1e-10 * (1.0 + beta.norm())) break;
    }
    for (std::size_t k = 0; k < d; ++k) params.weights(j)[k] = beta(static_cast<Eigen::Index>(k));
    params.bias(j) = beta(cols - 1);
  }
}

/// Predicted label bitsets for `vertices` (other rows stay empty).
inline LabelTable predict_labels(const ParamStore& params, const LabelTable& truth,
                                 std::span<const Vertex> vertices, PredictionMode mode) {
  LabelTable out(truth.vertex_count(), truth.label_dim());
  for (Vertex v : vertices) {
    auto probs = label_probabilities(params, params.embedding(v));
    if (mode == PredictionMode::kThreshold) {
      for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] > 0.5) out.set(v, j);
      }
    } else {
      std::vector<std::size_t> order(probs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const std::size_t k = std::min(truth.count(v), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
      for (std::size_t i = 0; i < k; ++i) out.set(v, order[i]);
    }
  }
  return out;
}

struct EvalOptions {
  PredictionMode prediction = PredictionMode::kThreshold;
  LogisticFit fit;
};

struct EvalOutcome {
  double macro_f1 = 0.0;
  ParamStore params;
};

/// Stage 1 trains embeddings on graph structure alone (q = 0); stage 2 fits
/// the logistic predictor on the training vertices with embeddings frozen.
inline EvalOutcome two_stage_eval_full(const Graph& g, const LabelTable& labels, const Split& split,
                                       const SamplerConfig& sampler, TrainConfig train_config,
                                       const EvalOptions& options = {}) {
  train_config.sampler = sampler;
  train_config.loss.q = 0.0;
  train_config.loss.mode = LossMode::kEdgeOnly;
  const LabelTable censored = censor(labels, split);
  auto trained = train(g, {nullptr, nullptr}, train_config);
  EvalOutcome out;
  out.params = ParamStore(g.vertex_count(), train_config.dim, labels.label_dim());
  out.params.set_init_seed(train_config.seed);
  std::copy_n(trained.params.flat().begin(), g.vertex_count() * train_config.dim,
              out.params.flat().begin());
  fit_logistic(out.params, censored, split.train, options.fit);
  auto predicted = predict_labels(out.params, labels, split.test, options.prediction);
  out.macro_f1 = macro_f1(predicted, labels, split.test);
  return out;
}

inline double two_stage_eval(const Graph& g, const LabelTable& labels, const Split& split,
                             const SamplerConfig& sampler, const TrainConfig& train_config,
                             const EvalOptions& options = {}) {
  return two_stage_eval_full(g, labels, split, sampler, train_config, options).macro_f1;
}

/// Trains embeddings and the label predictor jointly on
/// q * label loss + (1 - q) * edge loss, with the test vertices' labels
/// censored, then scores the learned predictor on the test vertices.
inline EvalOutcome simultaneous_eval_full(const Graph& g, const LabelTable& labels,
                                          const Split& split, const SamplerConfig& sampler,
                                          TrainConfig train_config,
                                          const EvalOptions& options = {}) {
  train_config.sampler = sampler;
  train_config.loss.mode = LossMode::kNodeClassification;
  const LabelTable censored = censor(labels, split);
  auto trained = train(g, {&censored, nullptr}, train_config);
  EvalOutcome out;
  out.params = std::move(trained.params);
  auto predicted = predict_labels(out.params, labels, split.test, options.prediction);
  out.macro_f1 = macro_f1(predicted, labels, split.test);
  return out;
}

inline double simultaneous_eval(const Graph& g, const LabelTable& labels, const Split& split,
                                const SamplerConfig& sampler, const TrainConfig& train_config,
                                const EvalOptions& options = {}) {
  return simultaneous_eval_full(g, labels, split, sampler, train_config, options).macro_f1;
}

// ---------------------------------------------------------------------------
// Results tables

/// Row label in the "base+negatives" style of published comparison tables,
/// e.g. "p-samp+ns" or "rw/induced+ind".
inline std::string sampler_label(const SamplerConfig& c) {
  std::string base;
  switch (c.algorithm) {
    case SamplerAlgorithm::kRwSkipgram: base = "rw/skipgram"; break;
    case SamplerAlgorithm::kRwInduced: base = "rw/induced"; break;
    case SamplerAlgorithm::kPSampling: base = "p-samp"; break;
    case SamplerAlgorithm::kUniformEdge: base = "unif.edge"; break;
  }
  switch (c.negative) {
    case NegativeMode::kNone: return base;
    case NegativeMode::kInduced: return base + "+ind";
    case NegativeMode::kUnigram: return base + "+ns";
  }
  return base;
}

struct ResultRecord {
  std::string protocol;  // two_stage | simultaneous
  std::string sampler;
  std::string dataset;
  std::string test_scheme;
  std::size_t seeds = 0;
  double macro_f1 = 0.0;  // mean over seeds
  double std_dev = 0.0;   // across seeds
};

inline void write_results_csv(std::ostream& out, std::span<const ResultRecord> rows) {
  out << "protocol,sampler,dataset,test_scheme,seeds,macro_f1,std\n";
  for (const auto& r : rows) {
    out << r.protocol << ',' << r.sampler << ',' << r.dataset << ',' << r.test_scheme << ','
        << r.seeds << ',' << r.macro_f1 << ',' << r.std_dev << '\n';
  }
}

enum class Protocol { kTwoStage, kSimultaneous };

inline constexpr std::uint64_t kSplitStream = 3ULL << 40;

inline std::string_view to_string(Protocol p) {
  return p == Protocol::kTwoStage ? "two_stage" : "simultaneous";
}

/// Scores one sampler under one protocol, averaging over `seeds` splits and
/// trainings (seed i uses train seed base_seed + i and its own split).
inline ResultRecord evaluate_protocol(const Graph& g, const LabelTable& labels,
                                      std::string dataset, Protocol protocol,
                                      const SamplerConfig& sampler, const TrainConfig& base,
                                      SplitScheme scheme, double test_fraction,
                                      std::size_t seeds, const EvalOptions& options = {}) {
  std::vector<double> scores;
  for (std::size_t i = 0; i < seeds; ++i) {
    TrainConfig config = base;
    config.seed = base.seed + i;
    Rng split_rng(config.seed, kSplitStream);
    auto split = make_split(g, test_fraction, scheme, split_rng);
    scores.push_back(protocol == Protocol::kTwoStage
                         ? two_stage_eval(g, labels, split, sampler, config, options)
                         : simultaneous_eval(g, labels, split, sampler, config, options));
  }
  ResultRecord r{std::string(to_string(protocol)), sampler_label(sampler), std::move(dataset),
                 std::string(to_string(scheme)), seeds, 0.0, 0.0};
  if (!scores.empty()) {
    r.macro_f1 = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(seeds);
    double ss = 0.0;
    for (double s : scores) ss += (s - r.macro_f1) * (s - r.macro_f1);
    r.std_dev = seeds > 1 ? std::sqrt(ss / static_cast<double>(seeds - 1)) : 0.0;
  }
  return r;
}

}  // namespace relerm
