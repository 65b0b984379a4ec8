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

// Graphex-process simulation. Vertices are points of a unit-rate Poisson
// process on [0, n] x [0, x_max] (label, latent feature); two points connect
// independently with probability W(x_i, x_j) and isolated points are dropped.
// Drawing the process once at the largest size and restricting it to labels
// <= n yields a growing, nested family of graphs G_n.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "relerm/error.hpp"
#include "relerm/eval.hpp"
#include "relerm/graph.hpp"
#include "relerm/model.hpp"
#include "relerm/random.hpp"
#include "relerm/samplers.hpp"
#include "relerm/trainer.hpp"

namespace relerm {

struct Graphon {
  std::string name;
  std::function<double(double, double)> W;
  double x_max = 1.0;
  double edge_rate = 0.0;  // half the integral of W over the quadrant
  double box_mass = 0.0;   // integral of W over [0, x_max]^2

  /// W(x, y) = exp(-x - y), truncated where exp(-x_max) = tail.
  static Graphon exponential(double tail = 1e-8) {
    const double x_max = -std::log(tail);
    const double kept = 1.0 - tail;
    return {"exponential", [](double x, double y) { return std::exp(-x - y); }, x_max, 0.5,
            kept * kept};
  }
  /// W = c on [0, 1]^2 (dense regime).
  static Graphon constant(double c) {
    return {"constant", [c](double, double) { return c; }, 1.0, 0.5 * c, c};
  }
  static Graphon zero(double x_max = 1.0) {
    return {"zero", [](double, double) { return 0.0; }, x_max, 0.0, 0.0};
  }

  /// Mean edge count of G_n (Mecke formula over the truncated box).
  double expected_edges(double n) const { return 0.5 * n * n * box_mass; }
  double expected_points(double n) const { return n * x_max; }
};

inline std::optional<Graphon> parse_graphon(std::string_view name, double c = 0.5) {
  if (name == "exponential") return Graphon::exponential();
  if (name == "constant") return Graphon::constant(c);
  if (name == "zero") return Graphon::zero();
  return std::nullopt;
}

struct LatentGraph {
  Graph graph;
  std::vector<double> latents;           // feature x of each vertex
  std::vector<std::uint64_t> point_ids;  // identity of each vertex in its process
  double size = 0.0;
};

inline constexpr double kDefaultPointBudget = 2e5;

/// One realization of the point process at size n_max together with all its
/// edges. Points are kept in label order, so any restriction is a prefix.
class LatentProcess {
 public:
  static LatentProcess sample(const Graphon& w, double n_max, Rng& rng,
                              double point_budget = kDefaultPointBudget) {
    if (!(n_max > 0.0)) throw Error("invalid_argument", "graphex size must be > 0");
    if (w.expected_points(n_max) > point_budget) {
      throw RefusalError("graphex size " + std::to_string(n_max) + " expects " +
                         std::to_string(w.expected_points(n_max)) +
                         " points, over the budget of " + std::to_string(point_budget));
    }
    LatentProcess p;
    p.n_max_ = n_max;
    const auto count = std::poisson_distribution<std::uint64_t>(w.expected_points(n_max))(rng);
    std::vector<std::pair<double, double>> pts(count);
    for (auto& [label, x] : pts) {
      label = rng.uniform() * n_max;
      x = rng.uniform() * w.x_max;
    }
    std::sort(pts.begin(), pts.end());
    p.labels_.reserve(count);
    p.features_.reserve(count);
    for (auto [label, x] : pts) {
      p.labels_.push_back(label);
      p.features_.push_back(x);
    }
    for (std::size_t j = 1; j < count; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        if (rng.uniform() < w.W(p.features_[i], p.features_[j])) {
          p.edges_.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j)});
        }
      }
    }
    return p;
  }

  /// G_n: the points with label <= n, their edges, isolated points dropped.
  LatentGraph restrict(double n) const {
    if (n > n_max_) throw Error("invalid_argument", "restriction beyond the sampled size");
    const auto cut = static_cast<std::size_t>(
        std::upper_bound(labels_.begin(), labels_.end(), n) - labels_.begin());
    // Edges are generated in order of their larger endpoint.
    const auto end = std::partition_point(edges_.begin(), edges_.end(),
                                          [&](const VertexPair& e) { return e.v < cut; });
    std::vector<std::uint8_t> touched(cut, 0);
    for (auto it = edges_.begin(); it != end; ++it) touched[it->u] = touched[it->v] = 1;
    std::vector<Vertex> dense(cut, 0);
    LatentGraph out;
    out.size = n;
    for (std::size_t i = 0; i < cut; ++i) {
      if (!touched[i]) continue;
      dense[i] = static_cast<Vertex>(out.point_ids.size());
      out.point_ids.push_back(i);
      out.latents.push_back(features_[i]);
    }
    std::vector<VertexPair> edges;
    edges.reserve(static_cast<std::size_t>(end - edges_.begin()));
    for (auto it = edges_.begin(); it != end; ++it) edges.push_back({dense[it->u], dense[it->v]});
    out.graph = Graph::from_pairs(out.point_ids.size(), edges);
    return out;
  }

  double size() const { return n_max_; }
  std::size_t point_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

 private:
  double n_max_ = 0.0;
  std::vector<double> labels_;
  std::vector<double> features_;
  std::vector<VertexPair> edges_;  // (i, j), i < j, ordered by j
};

inline LatentGraph sample_graphex(const Graphon& w, double n, Rng& rng,
                                  double point_budget = kDefaultPointBudget) {
  return LatentProcess::sample(w, n, rng, point_budget).restrict(n);
}

/// Vertex parameters as marks of the latent feature: mean(x) plus independent
/// N(0, noise_sd^2) noise per coordinate.
struct MarkingKernel {
  std::size_t dim = 2;
  std::function<std::vector<double>(double)> mean;
  double noise_sd = 0.0;

  /// m_k(x) = scale * exp(-x / (k + 1)).
  static MarkingKernel decaying(std::size_t dim, double scale, double noise_sd) {
    return {dim,
            [dim, scale](double x) {
              std::vector<double> m(dim);
              for (std::size_t k = 0; k < dim; ++k) m[k] = scale * std::exp(-x / (k + 1.0));
              return m;
            },
            noise_sd};
  }
};

/// Draws every vertex's embedding from the kernel. The noise of a vertex is
/// keyed by its point id, so two restrictions of one process marked with the
/// same rng state agree on shared vertices.
inline ParamStore mark_embeddings(const LatentGraph& lg, const MarkingKernel& kernel, Rng& rng,
                                  std::size_t label_dim = 0) {
  const std::uint64_t salt = rng();
  ParamStore p(lg.graph.vertex_count(), kernel.dim, label_dim);
  for (Vertex v = 0; v < lg.graph.vertex_count(); ++v) {
    auto m = kernel.mean(lg.latents[v]);
    if (m.size() != kernel.dim) throw Error("invalid_argument", "marking kernel dimension mismatch");
    auto row = p.embedding(v);
    if (kernel.noise_sd > 0.0) {
      Rng noise(salt, lg.point_ids[v]);
      std::normal_distribution<double> z(0.0, kernel.noise_sd);
      for (std::size_t k = 0; k < kernel.dim; ++k) row[k] = m[k] + z(noise);
    } else {
      std::copy(m.begin(), m.end(), row.begin());
    }
  }
  return p;
}

/// Binary vertex label with P(label | x) = sigmoid(intercept + slope * x).
struct LabelKernel {
  double intercept = 0.0;
  double slope = 0.0;

  double probability(double x) const { return 1.0 / (1.0 + std::exp(-(intercept + slope * x))); }

  /// Labels keyed by point id, consistent across restrictions for one salt.
  LabelTable draw(const LatentGraph& lg, std::uint64_t salt) const {
    LabelTable t(lg.graph.vertex_count(), 1);
    for (Vertex v = 0; v < lg.graph.vertex_count(); ++v) {
      if (unit_from_bits(hash_key(salt, lg.point_ids[v], 0x1abe1)) < probability(lg.latents[v])) {
        t.set(v, 0);
      }
    }
    return t;
  }
};

// ---------------------------------------------------------------------------
// Experiments

struct GraphexRecord {
  std::string experiment;
  double n = 0.0;
  std::optional<std::size_t> replicate;  // empty for aggregates
  std::string statistic;
  double value = 0.0;
};

inline void write_records(std::ostream& out, std::span<const GraphexRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["n"] = r.n;
    j["replicate"] = r.replicate ? nlohmann::ordered_json(*r.replicate) : nlohmann::ordered_json();
    j["statistic"] = r.statistic;
    j["value"] = r.value;
    out << j.dump() << '\n';
  }
}

struct SizeSummary {
  double n = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;  // across replicates
  std::vector<double> values;
};

namespace detail {

inline SizeSummary summarize(double n, std::vector<double> values) {
  SizeSummary s{n, 0.0, 0.0, std::move(values)};
  const auto r = s.values.size();
  if (r == 0) return s;
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(r);
  double ss = 0.0;
  for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = r > 1 ? std::sqrt(ss / static_cast<double>(r - 1)) : 0.0;
  return s;
}

// Runs fn(0..count-1) on up to `workers` threads; fn writes only its own slot.
template <typename Fn>
void for_each_replicate(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline void append_summary(std::vector<GraphexRecord>& out, const std::string& experiment,
                           const std::string& statistic, const SizeSummary& s) {
  for (std::size_t r = 0; r < s.values.size(); ++r) {
    out.push_back({experiment, s.n, r, statistic, s.values[r]});
  }
  out.push_back({experiment, s.n, std::nullopt, statistic + "_mean", s.mean});
  out.push_back({experiment, s.n, std::nullopt, statistic + "_std", s.std_dev});
}

inline constexpr std::uint64_t kProcessStream = 11;
inline constexpr std::uint64_t kMarkStream = 12;
inline constexpr std::uint64_t kRiskStream = 13;

}  // namespace detail

struct ExperimentCommon {
  std::size_t replicates = 20;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double point_budget = kDefaultPointBudget;
};

/// Edge counts of independent draws of G_n.
inline SizeSummary edge_count_experiment(const Graphon& w, double n, const ExperimentCommon& c) {
  std::vector<double> counts(c.replicates);
  detail::for_each_replicate(c.replicates, c.workers, [&](std::size_t r) {
    Rng rng(hash_key(c.seed, 0, r), detail::kProcessStream);
    counts[r] = static_cast<double>(sample_graphex(w, n, rng, c.point_budget).graph.edge_count());
  });
  return detail::summarize(n, std::move(counts));
}

struct RiskExperimentConfig {
  ExperimentCommon common;
  SamplerConfig sampler;
  LossConfig loss;
  // For p-sampling the retention is sample_size / n, so a draw from G_n is
  // distributed like G_{sample_size} for every n.
  double sample_size = 10.0;
  std::size_t risk_samples = 2000;
};

inline SamplerConfig scaled_sampler(SamplerConfig s, double sample_size, double n) {
  if (s.algorithm == SamplerAlgorithm::kPSampling) s.retention = std::min(1.0, sample_size / n);
  return s;
}

/// For each size, the Monte-Carlo risk at marked parameters across
/// independent replicates of (G_n, marks).
inline std::vector<SizeSummary> risk_convergence_experiment(const Graphon& w,
                                                            const MarkingKernel& kernel,
                                                            std::span<const double> sizes,
                                                            const RiskExperimentConfig& config) {
  std::vector<SizeSummary> out;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double n = sizes[k];
    const auto sampler = scaled_sampler(config.sampler, config.sample_size, n);
    std::vector<double> risks(config.common.replicates);
    detail::for_each_replicate(config.common.replicates, config.common.workers, [&](std::size_t r) {
      const std::uint64_t key = hash_key(config.common.seed, k + 1, r);
      Rng process_rng(key, detail::kProcessStream);
      auto lg = sample_graphex(w, n, process_rng, config.common.point_budget);
      if (lg.graph.edge_count() == 0) {
        risks[r] = 0.0;
        return;
      }
      Rng mark_rng(key, detail::kMarkStream);
      auto params = mark_embeddings(lg, kernel, mark_rng);
      Rng risk_rng(key, detail::kRiskStream);
      risks[r] = estimate_risk(lg.graph, {}, params, sampler, config.loss, config.risk_samples,
                               risk_rng)
                     .mean;
    });
    out.push_back(detail::summarize(n, std::move(risks)));
  }
  return out;
}

struct GrowthExperimentConfig {
  ExperimentCommon common;
  TrainConfig train;
  double sample_size = 10.0;
  // When > 0, steps = round(steps_per_size * n), which keeps the expected
  // number of updates per vertex fixed under p-sampling at sample_size / n.
  double steps_per_size = 0.0;
};

inline TrainConfig scaled_train_config(const GrowthExperimentConfig& c, double n) {
  TrainConfig t = c.train;
  t.sampler = scaled_sampler(t.sampler, c.sample_size, n);
  if (c.steps_per_size > 0.0) t.steps = static_cast<std::size_t>(std::llround(c.steps_per_size * n));
  t.eval_every = 0;
  t.eval_samples = 0;
  return t;
}

/// Mean per-vertex embedding distance between fits on G_n and G_{n+delta},
/// both restrictions of one process, over the vertices of G_n. Training is
/// keyed by point id, so a shared vertex starts from the same value and sees
/// coupled sampling noise.
inline std::vector<SizeSummary> stability_experiment(const Graphon& w,
                                                     std::span<const double> sizes, double delta,
                                                     const GrowthExperimentConfig& config) {
  if (!(delta >= 0.0)) throw Error("invalid_argument", "delta must be >= 0");
  std::vector<SizeSummary> out;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double n = sizes[k];
    std::vector<double> drift(config.common.replicates);
    detail::for_each_replicate(config.common.replicates, config.common.workers, [&](std::size_t r) {
      const std::uint64_t key = hash_key(config.common.seed, k + 1, r);
      Rng process_rng(key, detail::kProcessStream);
      auto process = LatentProcess::sample(w, n + delta, process_rng, config.common.point_budget);
      auto small = process.restrict(n);
      auto large = process.restrict(n + delta);
      if (small.graph.vertex_count() == 0) {
        drift[r] = 0.0;
        return;
      }
      auto fit = [&](const LatentGraph& lg, double size) {
        TrainConfig t = scaled_train_config(config, size);
        t.seed = key;
        return train(lg.graph, {}, t, std::nullopt, lg.point_ids).params;
      };
      const auto a = fit(small, n);
      const auto b = delta == 0.0 ? a : fit(large, n + delta);
      // Both id lists are ascending and small's ids are a subset of large's.
      double total = 0.0;
      std::size_t j = 0;
      for (Vertex v = 0; v < small.graph.vertex_count(); ++v) {
        while (large.point_ids[j] != small.point_ids[v]) ++j;
        double ss = 0.0;
        auto x = a.embedding(v);
        auto y = b.embedding(static_cast<Vertex>(j));
        for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
        total += std::sqrt(ss);
      }
      drift[r] = total / static_cast<double>(small.graph.vertex_count());
    });
    out.push_back(detail::summarize(n, std::move(drift)));
  }
  return out;
}

struct GlobalParamResult {
  double n = 0.0;
  std::vector<std::vector<double>> estimates;  // per replicate: weights then bias
  SizeSummary distance;                        // to the largest size's estimate
};

/// Two-stage fits on nested graphs G_n of one process per replicate: edge-only
/// embeddings, then a logistic fit of the label predictor on all vertices.
/// With zero training steps nothing is fitted and the estimate stays at zero.
inline std::vector<GlobalParamResult> global_param_experiment(const Graphon& w,
                                                              const LabelKernel& labels,
                                                              std::span<const double> sizes,
                                                              const GrowthExperimentConfig& config,
                                                              const LogisticFit& fit = {}) {
  if (sizes.empty()) return {};
  const double n_max = *std::max_element(sizes.begin(), sizes.end());
  const std::size_t R = config.common.replicates;
  std::vector<std::vector<std::vector<double>>> est(sizes.size(),
                                                     std::vector<std::vector<double>>(R));
  detail::for_each_replicate(R, config.common.workers, [&](std::size_t r) {
    const std::uint64_t key = hash_key(config.common.seed, 0, r);
    Rng process_rng(key, detail::kProcessStream);
    auto process = LatentProcess::sample(w, n_max, process_rng, config.common.point_budget);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      auto lg = process.restrict(sizes[k]);
      TrainConfig t = scaled_train_config(config, sizes[k]);
      t.seed = key;
      t.loss.mode = LossMode::kEdgeOnly;
      t.loss.q = 0.0;
      ParamStore params(lg.graph.vertex_count(), t.dim, 1);
      if (t.steps > 0 && lg.graph.edge_count() > 0) {
        auto trained = train(lg.graph, {}, t, std::nullopt, lg.point_ids).params;
        std::copy_n(trained.flat().begin(), lg.graph.vertex_count() * t.dim, params.flat().begin());
        auto table = labels.draw(lg, key);
        std::vector<Vertex> all(lg.graph.vertex_count());
        std::iota(all.begin(), all.end(), Vertex{0});
        fit_logistic(params, table, all, fit);
      }
      auto g = params.global();
      est[k][r].assign(g.begin(), g.end());
    }
  });
  const auto top = static_cast<std::size_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<GlobalParamResult> out;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<double> dist(R);
    for (std::size_t r = 0; r < R; ++r) {
      double ss = 0.0;
      for (std::size_t i = 0; i < est[k][r].size(); ++i) {
        const double diff = est[k][r][i] - est[top][r][i];
        ss += diff * diff;
      }
      dist[r] = std::sqrt(ss);
    }
    out.push_back({sizes[k], std::move(est[k]), detail::summarize(sizes[k], std::move(dist))});
  }
  return out;
}

}  // namespace relerm
