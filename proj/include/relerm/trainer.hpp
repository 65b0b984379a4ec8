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

// Relational empirical risk: the expected loss of one sampler draw. This file
// holds the Monte-Carlo estimator, the exact enumeration oracles for small
// graphs, the SGD solver, and the gradient-unbiasedness check that ties them
// together.

#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "relerm/error.hpp"
#include "relerm/graph.hpp"
#include "relerm/model.hpp"
#include "relerm/random.hpp"
#include "relerm/samplers.hpp"

namespace relerm {

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Monte-Carlo estimate of the relational empirical risk from n independent
/// sampler draws.
inline RiskEstimate estimate_risk(const Sampler& sampler, const Annotations& ann,
                                  const ParamStore& params, const LossConfig& config,
                                  std::size_t n_samples, Rng& rng) {
  RiskEstimate out;
  out.n_samples = n_samples;
  if (n_samples == 0) return out;
  // Welford; the sum of squares is unstable when the risk is large and nearly constant.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double x = loss(sampler(rng), ann, params, config);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  out.mean = mean;
  if (n_samples > 1) {
    const double var = m2 / static_cast<double>(n_samples - 1);
    out.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_samples));
  }
  return out;
}

inline RiskEstimate estimate_risk(const Graph& g, const Annotations& ann,
                                  const ParamStore& params, const SamplerConfig& sampler,
                                  const LossConfig& config, std::size_t n_samples, Rng& rng) {
  return estimate_risk(Sampler(g, sampler), ann, params, config, n_samples, rng);
}

// ---------------------------------------------------------------------------
// Exact oracles. These enumerate every outcome of a sampler together with its
// probability. Subgraphs are rebuilt here by brute force over vertex pairs,
// independently of the sampler implementations they check.

using OutcomeVisitor = std::function<void(double probability, const SampledSubgraph&)>;

inline constexpr std::size_t kMaxEnumerableVertices = 20;
inline constexpr double kMaxEnumerableWalks = 1e6;

/// Visits all 2^V retention sets of p-sampling.
inline void for_each_psample_outcome(const Graph& g, double p, const OutcomeVisitor& visit) {
  const std::size_t n = g.vertex_count();
  if (n > kMaxEnumerableVertices) {
    throw RefusalError("p-sampling enumeration refused: " + std::to_string(n) +
                       " vertices exceeds " + std::to_string(kMaxEnumerableVertices));
  }
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const int kept = std::popcount(mask);
    const double prob = std::pow(p, kept) * std::pow(1.0 - p, static_cast<int>(n) - kept);
    if (prob == 0.0) continue;
    SampledSubgraph s;
    s.algorithm = SamplerAlgorithm::kPSampling;
    s.negative = NegativeMode::kInduced;
    for (Vertex v = 0; v < n; ++v) {
      if (!(mask >> v & 1)) continue;
      bool touches = false;
      for (Vertex w = 0; w < n && !touches; ++w) {
        touches = (mask >> w & 1) && g.has_edge(v, w);
      }
      if (touches) s.vertices.push_back(v);
    }
    s.base_vertex_count = s.vertices.size();
    for (std::size_t a = 0; a < s.vertices.size(); ++a) {
      for (std::size_t b = a + 1; b < s.vertices.size(); ++b) {
        VertexPair pr{s.vertices[a], s.vertices[b]};
        (g.has_edge(pr.u, pr.v) ? s.positive_pairs : s.negative_pairs).push_back(pr);
      }
    }
    visit(prob, s);
  }
}

/// Number of length-`steps` walks whose start has positive probability.
inline double count_walks(const Graph& g, std::size_t steps) {
  std::vector<double> ways(g.vertex_count(), 1.0), next(g.vertex_count());
  for (std::size_t t = 0; t < steps; ++t) {
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      double s = 0.0;
      for (Vertex w : g.neighbors(v)) s += ways[w];
      next[v] = s;
    }
    ways.swap(next);
  }
  double total = 0.0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (g.degree(v) > 0) total += ways[v];
  }
  return total;
}

/// Visits every walk of the configured random-walk sampler (rw_induced or
/// rw_skipgram; negatives none or induced) with its probability
/// start(v_1) * prod 1/deg(v_i).
inline void for_each_walk_outcome(const Graph& g, const SamplerConfig& config,
                                  const OutcomeVisitor& visit) {
  if (config.algorithm != SamplerAlgorithm::kRwInduced &&
      config.algorithm != SamplerAlgorithm::kRwSkipgram) {
    throw RefusalError("walk enumeration needs a random-walk sampler");
  }
  if (config.negative == NegativeMode::kUnigram) {
    throw RefusalError("walk enumeration does not cover unigram negatives");
  }
  if (g.edge_count() == 0) throw EmptyGraphError("no walks on an edgeless graph");
  const double walks = count_walks(g, config.walk_length);
  if (walks > kMaxEnumerableWalks) {
    throw RefusalError("walk enumeration refused: " + std::to_string(walks) + " walks");
  }
  const std::size_t n = g.vertex_count();
  std::size_t non_isolated = 0;
  for (Vertex v = 0; v < n; ++v) non_isolated += g.degree(v) > 0;

  auto report = [&](const std::vector<Vertex>& walk, double prob) {
    SampledSubgraph s;
    s.algorithm = config.algorithm;
    for (Vertex v : walk) {
      if (std::find(s.vertices.begin(), s.vertices.end(), v) == s.vertices.end()) {
        s.vertices.push_back(v);
      }
    }
    s.base_vertex_count = s.vertices.size();
    const bool induced =
        config.algorithm == SamplerAlgorithm::kRwInduced || config.negative == NegativeMode::kInduced;
    if (induced) {
      for (std::size_t a = 0; a < s.vertices.size(); ++a) {
        for (std::size_t b = a + 1; b < s.vertices.size(); ++b) {
          VertexPair pr{s.vertices[a], s.vertices[b]};
          if (g.has_edge(pr.u, pr.v)) {
            s.positive_pairs.push_back(pr);
          } else if (config.negative == NegativeMode::kInduced) {
            s.negative_pairs.push_back(pr);
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < walk.size(); ++i) {
        for (std::size_t j = i + 1; j < walk.size(); ++j) {
          if (j - i < config.window && walk[i] != walk[j]) {
            s.positive_pairs.push_back({walk[i], walk[j]});
          }
        }
      }
    }
    visit(prob, s);
  };

  std::vector<Vertex> walk;
  std::function<void(double)> extend = [&](double prob) {
    if (walk.size() == config.walk_length + 1) {
      report(walk, prob);
      return;
    }
    const Vertex at = walk.back();
    const double step = prob / static_cast<double>(g.degree(at));
    for (Vertex w : g.neighbors(at)) {
      walk.push_back(w);
      extend(step);
      walk.pop_back();
    }
  };
  for (Vertex v = 0; v < n; ++v) {
    if (g.degree(v) == 0) continue;
    const double start = config.walk_start == WalkStart::kUniformVertex
                             ? 1.0 / static_cast<double>(non_isolated)
                             : static_cast<double>(g.degree(v)) / (2.0 * g.edge_count());
    walk.assign(1, v);
    extend(start);
  }
}

inline void for_each_outcome(const Graph& g, const SamplerConfig& config,
                             const OutcomeVisitor& visit) {
  switch (config.algorithm) {
    case SamplerAlgorithm::kPSampling:
      if (config.negative == NegativeMode::kUnigram) {
        throw RefusalError("p-sampling enumeration does not cover unigram negatives");
      }
      for_each_psample_outcome(g, config.retention, visit);
      return;
    case SamplerAlgorithm::kRwInduced:
    case SamplerAlgorithm::kRwSkipgram:
      for_each_walk_outcome(g, config, visit);
      return;
    case SamplerAlgorithm::kUniformEdge:
      break;
  }
  throw RefusalError("no exact oracle for sampler " + config.describe());
}

/// Exact relational empirical risk under p-sampling, by enumerating all
/// retention subsets. Refuses graphs with more than 20 vertices.
inline double exact_risk_psample(const Graph& g, const Annotations& ann, const ParamStore& params,
                                 double p, const LossConfig& config) {
  double risk = 0.0;
  for_each_psample_outcome(g, p, [&](double prob, const SampledSubgraph& s) {
    risk += prob * loss(s, ann, params, config);
  });
  return risk;
}

/// Exact relational empirical risk under a random-walk sampler, by
/// enumerating all walks. Refuses more than 10^6 walks.
inline double exact_risk_walk(const Graph& g, const Annotations& ann, const ParamStore& params,
                              const SamplerConfig& sampler, const LossConfig& config) {
  double risk = 0.0;
  for_each_walk_outcome(g, sampler, [&](double prob, const SampledSubgraph& s) {
    risk += prob * loss(s, ann, params, config);
  });
  return risk;
}

inline double exact_risk(const Graph& g, const Annotations& ann, const ParamStore& params,
                         const SamplerConfig& sampler, const LossConfig& config) {
  double risk = 0.0;
  for_each_outcome(g, sampler, [&](double prob, const SampledSubgraph& s) {
    risk += prob * loss(s, ann, params, config);
  });
  return risk;
}

/// Gradient of the exact risk, laid out like `ParamStore::flat()`.
inline std::vector<double> exact_risk_gradient(const Graph& g, const Annotations& ann,
                                               const ParamStore& params,
                                               const SamplerConfig& sampler,
                                               const LossConfig& config) {
  std::vector<double> total(params.flat().size(), 0.0);
  for_each_outcome(g, sampler, [&](double prob, const SampledSubgraph& s) {
    gradient(s, ann, params, config).add_to(total, params, prob);
  });
  return total;
}

// ---------------------------------------------------------------------------
// Unbiasedness

struct UnbiasednessReport {
  std::size_t n_samples = 0;
  std::vector<double> exact;      // gradient of the exact risk
  std::vector<double> mean;       // mean stochastic gradient
  std::vector<double> std_error;  // per coordinate
  std::vector<double> z;          // (mean - exact) / std_error
  double max_abs_z = 0.0;

  bool passes(double z_bound) const { return max_abs_z < z_bound; }
};

/// Compares the mean of n stochastic gradients (one sampler draw each)
/// against the gradient of the exact risk. Coordinates with zero sampling
/// variance must agree to rounding error (z = 0) or get z = inf.
inline UnbiasednessReport check_unbiasedness(const Graph& g, const Annotations& ann,
                                             const ParamStore& params,
                                             const SamplerConfig& sampler_config,
                                             const LossConfig& config, std::size_t n, Rng& rng) {
  UnbiasednessReport r;
  r.n_samples = n;
  r.exact = exact_risk_gradient(g, ann, params, sampler_config, config);
  const std::size_t dim = r.exact.size();
  std::vector<double> mean(dim, 0.0), m2(dim, 0.0), draw(dim);
  Sampler sampler(g, sampler_config);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(draw.begin(), draw.end(), 0.0);
    gradient(sampler(rng), ann, params, config).add_to(draw, params, 1.0);
    const double count = static_cast<double>(i + 1);
    for (std::size_t k = 0; k < dim; ++k) {
      const double delta = draw[k] - mean[k];
      mean[k] += delta / count;
      m2[k] += delta * (draw[k] - mean[k]);
    }
  }
  r.mean = mean;
  r.std_error.assign(dim, 0.0);
  r.z.assign(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    const double var = n > 1 ? m2[k] / static_cast<double>(n - 1) : 0.0;
    r.std_error[k] = std::sqrt(var / static_cast<double>(std::max<std::size_t>(n, 1)));
    const double diff = mean[k] - r.exact[k];
    const double rounding = 1e-9 * (1.0 + std::abs(r.exact[k]));
    if (r.std_error[k] > rounding) {
      r.z[k] = diff / r.std_error[k];
    } else {
      r.z[k] = std::abs(diff) <= rounding ? 0.0 : std::numeric_limits<double>::infinity();
    }
    r.max_abs_z = std::max(r.max_abs_z, std::abs(r.z[k]));
  }
  return r;
}

// ---------------------------------------------------------------------------
// SGD

/// params <- params - lr * grad, touching only the entries present in grad.
inline void sgd_step(ParamStore& params, const SparseGradient& grad, double learning_rate) {
  apply_gradient(params, grad, learning_rate);
}

struct LearningRate {
  enum class Kind { kConstant, kLinear };
  Kind kind = Kind::kLinear;
  double start = 0.025;
  double end = 1e-4;

  double at(std::size_t step, std::size_t steps) const {
    if (kind == Kind::kConstant || steps == 0) return start;
    return start + (end - start) * static_cast<double>(step) / static_cast<double>(steps);
  }
};

struct TrainConfig {
  SamplerConfig sampler;
  LossConfig loss;
  std::size_t dim = 128;
  std::size_t steps = 1000;
  LearningRate learning_rate;
  // Multiplies the step size of the global (label predictor) parameters.
  double global_lr_scale = 1.0;
  bool train_embeddings = true;
  bool train_global = true;
  std::size_t workers = 1;
  // Concurrent unsynchronized sparse updates. Nondeterministic.
  bool lock_free = false;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // 0: initial and final risk only
  std::size_t eval_samples = 16;

  std::vector<std::string> violations() const {
    auto out = sampler.violations();
    auto more = loss.violations();
    out.insert(out.end(), more.begin(), more.end());
    if (!(learning_rate.start > 0.0) || !(learning_rate.end > 0.0)) {
      out.push_back("train.lr must be > 0");
    }
    if (dim == 0) out.push_back("model.dim must be >= 1");
    if (workers == 0) out.push_back("train.workers must be >= 1");
    return out;
  }
};

struct TraceRecord {
  std::size_t step = 0;
  double risk_mean = 0.0;
  double risk_stderr = 0.0;
  double wallclock = 0.0;  // seconds since training started
};

struct TrainResult {
  ParamStore params;
  std::vector<TraceRecord> trace;
};

inline constexpr double kDivergenceThreshold = 1e6;

namespace detail {

inline constexpr std::uint64_t kSampleStream = 1ULL << 40;
inline constexpr std::uint64_t kEvalStream = 2ULL << 40;

inline SparseGradient restrict_gradient(SparseGradient g, const TrainConfig& config) {
  if (!config.train_embeddings) {
    g.vertices.clear();
    g.vertex_values.clear();
    g.categories.clear();
    g.category_values.clear();
  }
  if (!config.train_global) g.global.clear();
  return g;
}

inline void apply_update(ParamStore& params, const SparseGradient& g, double lr,
                         const TrainConfig& config) {
  SparseGradient local = restrict_gradient(g, config);
  if (config.global_lr_scale != 1.0) {
    for (double& x : local.global) x *= config.global_lr_scale;
  }
  sgd_step(params, local, lr);
}

// Lock-free variant: atomic per-coordinate adds on shared storage.
inline void apply_update_atomic(ParamStore& params, const SparseGradient& g, double lr,
                                const TrainConfig& config) {
  SparseGradient local = restrict_gradient(g, config);
  if (config.global_lr_scale != 1.0) {
    for (double& x : local.global) x *= config.global_lr_scale;
  }
  auto flat = params.flat();
  auto add = [&](std::size_t index, double value) {
    std::atomic_ref<double>(flat[index]).fetch_add(-lr * value, std::memory_order_relaxed);
  };
  const std::size_t d = local.dim;
  for (std::size_t i = 0; i < local.vertices.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) add(local.vertices[i] * d + k, local.vertex_values[i * d + k]);
  }
  for (std::size_t i = 0; i < local.global.size(); ++i) add(params.weights_offset() + i, local.global[i]);
  for (std::size_t i = 0; i < local.categories.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      add(params.category_offset() + local.categories[i] * d + k, local.category_values[i * d + k]);
    }
  }
}

}  // namespace detail

/// Runs `steps` iterations of draw -> gradient -> SGD update.
///
/// Step t always draws its sample from the stream (seed, t), so in the
/// default mode results are bit-identical for any worker count: workers only
/// produce samples, and a single consumer applies updates in step order.
/// With `lock_free`, workers also compute and apply updates concurrently.
///
/// `vertex_keys` (optional, one per vertex) key both the embedding
/// initialization and the p-sampling coins, so runs on two graphs that share
/// vertices are coupled on those vertices.
inline TrainResult train(const Graph& g, const Annotations& ann, const TrainConfig& config,
                         std::optional<ParamStore> initial = std::nullopt,
                         std::span<const std::uint64_t> vertex_keys = {}) {
  if (auto v = config.violations(); !v.empty()) throw ConfigError(std::move(v));
  const std::size_t L = ann.labels ? ann.labels->label_dim() : 0;
  const std::size_t C = ann.categories ? ann.categories->category_count() : 0;
  TrainResult result;
  result.params = initial ? std::move(*initial)
                          : ParamStore::initialized(g.vertex_count(), config.dim, L, C,
                                                    config.seed, vertex_keys);
  ParamStore& params = result.params;
  const Sampler sampler(g, config.sampler,
                        std::vector<std::uint64_t>(vertex_keys.begin(), vertex_keys.end()));
  const auto started = std::chrono::steady_clock::now();

  auto record = [&](std::size_t step) {
    Rng rng(config.seed, detail::kEvalStream + step);
    RiskEstimate est;
    try {
      est = estimate_risk(sampler, ann, params, config.loss, config.eval_samples, rng);
    } catch (const NumericError& e) {
      throw DivergenceError(step, std::numeric_limits<double>::quiet_NaN(), e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!std::isfinite(est.mean) || est.mean > kDivergenceThreshold) {
      throw DivergenceError(step, est.mean,
                            "risk estimate " + std::to_string(est.mean) + " at step " +
                                std::to_string(step) + " exceeds the divergence threshold");
    }
    result.trace.push_back({step, est.mean, est.std_error, elapsed});
  };
  auto sample_for = [&](std::size_t step) {
    Rng rng(config.seed, detail::kSampleStream + step);
    return sampler(rng);
  };
  auto step_update = [&](std::size_t step, const SampledSubgraph& s) {
    try {
      auto grad = gradient(s, ann, params, config.loss);
      detail::apply_update(params, grad, config.learning_rate.at(step, config.steps), config);
    } catch (const NumericError& e) {
      throw DivergenceError(step, std::numeric_limits<double>::quiet_NaN(), e.what());
    }
  };

  record(0);
  if (config.steps == 0) return result;

  if (config.lock_free && config.workers > 1) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      try {
        for (std::size_t t = next++; t < config.steps; t = next++) {
          auto s = sample_for(t);
          auto grad = gradient(s, ann, params, config.loss);
          detail::apply_update_atomic(params, grad, config.learning_rate.at(t, config.steps), config);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.steps;
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < config.workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    record(config.steps);
    return result;
  }

  auto after_step = [&](std::size_t t) {
    const std::size_t done = t + 1;
    if (config.eval_every > 0 && (done % config.eval_every == 0 || done == config.steps)) {
      record(done);
    } else if (config.eval_every == 0 && done == config.steps) {
      record(done);
    }
  };

  if (config.workers <= 1) {
    for (std::size_t t = 0; t < config.steps; ++t) {
      step_update(t, sample_for(t));
      after_step(t);
    }
    return result;
  }

  // Producers fill a bounded reorder buffer; this thread consumes in order.
  const std::size_t capacity = 4 * config.workers;
  std::mutex mutex;
  std::condition_variable produced, consumed;
  std::map<std::size_t, SampledSubgraph> ready;
  std::size_t consumed_upto = 0;
  bool stop = false;
  std::exception_ptr failure;
  auto producer = [&](std::size_t w) {
    try {
      for (std::size_t t = w; t < config.steps; t += config.workers) {
        {
          std::unique_lock lock(mutex);
          consumed.wait(lock, [&] { return stop || t < consumed_upto + capacity; });
          if (stop) return;
        }
        auto s = sample_for(t);
        std::lock_guard lock(mutex);
        ready.emplace(t, std::move(s));
        produced.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!failure) failure = std::current_exception();
      stop = true;
      produced.notify_all();
      consumed.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < config.workers; ++w) pool.emplace_back(producer, w);
  auto shutdown = [&] {
    {
      std::lock_guard lock(mutex);
      stop = true;
    }
    consumed.notify_all();
    for (auto& t : pool) t.join();
  };
  try {
    for (std::size_t t = 0; t < config.steps; ++t) {
      SampledSubgraph s;
      {
        std::unique_lock lock(mutex);
        produced.wait(lock, [&] { return failure || ready.count(t) > 0; });
        if (failure) break;
        auto node = ready.extract(t);
        s = std::move(node.mapped());
        consumed_upto = t + 1;
      }
      consumed.notify_all();
      step_update(t, s);
      after_step(t);
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace relerm
