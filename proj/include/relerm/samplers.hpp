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

// Graph subsampling algorithms. A sampler, together with a negative-sampling
// add-on, defines what counts as one "example" of a relational data set, and
// hence the empirical risk being minimized.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relerm/alias.hpp"
#include "relerm/error.hpp"
#include "relerm/graph.hpp"
#include "relerm/random.hpp"

namespace relerm {

enum class SamplerAlgorithm { kRwSkipgram, kRwInduced, kPSampling, kUniformEdge };
enum class NegativeMode { kNone, kInduced, kUnigram };
enum class WalkStart { kUniformVertex, kDegreeProportional };

inline std::string_view to_string(SamplerAlgorithm a) {
  switch (a) {
    case SamplerAlgorithm::kRwSkipgram: return "rw_skipgram";
    case SamplerAlgorithm::kRwInduced: return "rw_induced";
    case SamplerAlgorithm::kPSampling: return "p_sampling";
    case SamplerAlgorithm::kUniformEdge: return "uniform_edge";
  }
  return "?";
}
inline std::string_view to_string(NegativeMode m) {
  switch (m) {
    case NegativeMode::kNone: return "none";
    case NegativeMode::kInduced: return "induced";
    case NegativeMode::kUnigram: return "unigram";
  }
  return "?";
}
inline std::string_view to_string(WalkStart s) {
  return s == WalkStart::kUniformVertex ? "uniform_vertex" : "degree_proportional";
}

inline std::optional<SamplerAlgorithm> parse_sampler_algorithm(std::string_view s) {
  for (auto a : {SamplerAlgorithm::kRwSkipgram, SamplerAlgorithm::kRwInduced,
                 SamplerAlgorithm::kPSampling, SamplerAlgorithm::kUniformEdge}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}
inline std::optional<NegativeMode> parse_negative_mode(std::string_view s) {
  for (auto m : {NegativeMode::kNone, NegativeMode::kInduced, NegativeMode::kUnigram}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}
inline std::optional<WalkStart> parse_walk_start(std::string_view s) {
  for (auto w : {WalkStart::kUniformVertex, WalkStart::kDegreeProportional}) {
    if (to_string(w) == s) return w;
  }
  return std::nullopt;
}

struct SamplerConfig {
  SamplerAlgorithm algorithm = SamplerAlgorithm::kPSampling;
  std::size_t walk_length = 80;  // steps r; a walk visits r + 1 vertices
  std::size_t window = 10;
  double retention = 0.1;        // p for p-sampling
  std::size_t edge_count = 100;  // k for uniform edge sampling
  NegativeMode negative = NegativeMode::kUnigram;
  double unigram_power = 0.75;
  std::size_t negatives_per_vertex = 5;
  WalkStart walk_start = WalkStart::kUniformVertex;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(retention >= 0.0 && retention <= 1.0)) out.push_back("sampler.p must lie in [0,1]");
    if (!(unigram_power > 0.0)) out.push_back("sampler.unigram_power must be > 0");
    if (walk_length < 1) out.push_back("sampler.walk_length must be >= 1");
    if (window < 1) out.push_back("sampler.window must be >= 1");
    return out;
  }

  // Short "base+negative" label, e.g. "p_sampling+unigram".
  std::string describe() const {
    return std::string(to_string(algorithm)) + "+" + std::string(to_string(negative));
  }
};

/// One draw of a subsampling algorithm. `vertices[0, base_vertex_count)` are
/// the vertices produced by the base sampler; negative sampling may append
/// more. Pair multisets keep their multiplicities.
struct SampledSubgraph {
  std::vector<Vertex> vertices;
  std::size_t base_vertex_count = 0;
  std::vector<VertexPair> positive_pairs;
  std::vector<VertexPair> negative_pairs;
  SamplerAlgorithm algorithm = SamplerAlgorithm::kPSampling;
  NegativeMode negative = NegativeMode::kNone;

  std::span<const Vertex> base_vertices() const {
    return {vertices.data(), base_vertex_count};
  }
  bool empty() const { return vertices.empty(); }

  friend bool operator==(const SampledSubgraph&, const SampledSubgraph&) = default;
};

namespace detail {

inline std::vector<Vertex> distinct_in_order(std::span<const Vertex> seq) {
  std::vector<Vertex> out;
  std::vector<Vertex> seen;
  for (Vertex v : seq) {
    auto it = std::lower_bound(seen.begin(), seen.end(), v);
    if (it != seen.end() && *it == v) continue;
    seen.insert(it, v);
    out.push_back(v);
  }
  return out;
}

inline Vertex draw_walk_start(const Graph& g, WalkStart start, Rng& rng) {
  if (g.edge_count() == 0) throw EmptyGraphError("cannot start a walk on a graph with no edges");
  if (start == WalkStart::kDegreeProportional) {
    // Every vertex occurs deg(v) times in the adjacency block.
    return g.adjacency()[rng.index(g.adjacency().size())];
  }
  for (;;) {
    auto v = static_cast<Vertex>(rng.index(g.vertex_count()));
    if (g.degree(v) > 0) return v;
  }
}

}  // namespace detail

/// Simple random walk of `steps` steps from `start`; returns steps + 1 vertices.
inline std::vector<Vertex> random_walk_from(const Graph& g, Vertex start, std::size_t steps,
                                            Rng& rng) {
  if (g.degree(start) == 0) throw EmptyGraphError("walk start vertex is isolated");
  std::vector<Vertex> walk;
  walk.reserve(steps + 1);
  walk.push_back(start);
  for (std::size_t i = 0; i < steps; ++i) {
    auto row = g.neighbors(walk.back());
    walk.push_back(row[rng.index(row.size())]);
  }
  return walk;
}

/// Random walk with a start drawn per `start`. Isolated vertices are never
/// used as starting points.
inline std::vector<Vertex> random_walk(const Graph& g, std::size_t steps, WalkStart start,
                                       Rng& rng) {
  return random_walk_from(g, detail::draw_walk_start(g, start, rng), steps, rng);
}

/// Pairs (walk[i], walk[j]) with 0 < j - i < window. Walk revisits that would
/// pair a vertex with itself are dropped.
inline std::vector<VertexPair> skipgram_pairs(std::span<const Vertex> walk, std::size_t window) {
  std::vector<VertexPair> pairs;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    for (std::size_t j = i + 1; j < walk.size() && j - i < window; ++j) {
      if (walk[i] != walk[j]) pairs.push_back({walk[i], walk[j]});
    }
  }
  return pairs;
}

inline SampledSubgraph skipgram_subgraph(std::span<const Vertex> walk, std::size_t window) {
  SampledSubgraph s;
  s.algorithm = SamplerAlgorithm::kRwSkipgram;
  s.vertices = detail::distinct_in_order(walk);
  s.base_vertex_count = s.vertices.size();
  s.positive_pairs = skipgram_pairs(walk, window);
  return s;
}

inline SampledSubgraph walk_induced_subgraph(const Graph& g, std::span<const Vertex> walk) {
  SampledSubgraph s;
  s.algorithm = SamplerAlgorithm::kRwInduced;
  s.vertices = detail::distinct_in_order(walk);
  s.base_vertex_count = s.vertices.size();
  s.positive_pairs = induced_pairs(g, s.vertices).positives;
  return s;
}

/// Random walk + skipgram augmentation. Positives may include non-edges of
/// the graph (pairs two or more steps apart).
inline SampledSubgraph rw_skipgram_sample(const Graph& g, const SamplerConfig& config, Rng& rng) {
  auto walk = random_walk(g, config.walk_length, config.walk_start, rng);
  return skipgram_subgraph(walk, config.window);
}

/// Random walk, reported as the vertex-induced subgraph of the visited set.
inline SampledSubgraph rw_induced_sample(const Graph& g, const SamplerConfig& config, Rng& rng) {
  auto walk = random_walk(g, config.walk_length, config.walk_start, rng);
  return walk_induced_subgraph(g, walk);
}

/// p-sampling: keep each vertex independently with probability p, take the
/// induced subgraph, delete isolated vertices. Induced non-edges among the
/// surviving vertices are reported as negatives.
///
/// With `vertex_keys`, vertex v's coin is hash(salt, keys[v]) for one salt
/// drawn from `rng`. The draw is still p-sampling, and two graphs whose
/// vertices share keys see the same coin for a shared vertex.
inline SampledSubgraph p_sample(const Graph& g, double p, Rng& rng,
                                std::span<const std::uint64_t> vertex_keys = {}) {
  SampledSubgraph s;
  s.algorithm = SamplerAlgorithm::kPSampling;
  s.negative = NegativeMode::kInduced;
  const std::size_t n = g.vertex_count();
  std::vector<std::uint8_t> kept(n, 0);
  std::vector<Vertex> retained;
  const std::uint64_t salt = vertex_keys.empty() ? 0 : rng();
  for (Vertex v = 0; v < n; ++v) {
    const bool keep = vertex_keys.empty() ? rng.bernoulli(p)
                                          : unit_from_bits(hash_key(salt, vertex_keys[v])) < p;
    if (keep) {
      kept[v] = 1;
      retained.push_back(v);
    }
  }
  for (Vertex v : retained) {
    bool has_edge = false;
    for (Vertex w : g.neighbors(v)) {
      if (!kept[w]) continue;
      has_edge = true;
      if (v < w) s.positive_pairs.push_back({v, w});
    }
    if (has_edge) s.vertices.push_back(v);
  }
  s.base_vertex_count = s.vertices.size();
  for (std::size_t a = 0; a < s.vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < s.vertices.size(); ++b) {
      if (!g.has_edge(s.vertices[a], s.vertices[b])) {
        s.negative_pairs.push_back({s.vertices[a], s.vertices[b]});
      }
    }
  }
  return s;
}

/// k edges drawn uniformly with replacement; vertices are their endpoints.
inline SampledSubgraph uniform_edge_sample(const Graph& g, std::size_t k, Rng& rng) {
  if (g.edge_count() == 0) throw EmptyGraphError("cannot sample edges from an edgeless graph");
  SampledSubgraph s;
  s.algorithm = SamplerAlgorithm::kUniformEdge;
  std::vector<Vertex> endpoints;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& e = g.edges()[rng.index(g.edge_count())];
    s.positive_pairs.push_back(e);
    endpoints.push_back(e.u);
    endpoints.push_back(e.v);
  }
  s.vertices = detail::distinct_in_order(endpoints);
  s.base_vertex_count = s.vertices.size();
  return s;
}

/// Replaces the sample's pairs with the full induced subgraph of its vertices:
/// all induced edges as positives, all induced non-edges as negatives.
inline SampledSubgraph negative_induced(const Graph& g, SampledSubgraph sample) {
  auto pairs = induced_pairs(g, sample.vertices);
  sample.positive_pairs = std::move(pairs.positives);
  sample.negative_pairs = std::move(pairs.negatives);
  sample.negative = NegativeMode::kInduced;
  return sample;
}

/// Unigram negative-sampling distribution: P(v) proportional to degree(v)^power.
class UnigramTable {
 public:
  UnigramTable() = default;
  explicit UnigramTable(std::span<const double> weights) : alias_(weights) {}

  std::span<const double> probabilities() const { return alias_.probabilities(); }
  Vertex sample(Rng& rng) const { return alias_.sample(rng); }

 private:
  AliasTable alias_;
};

inline UnigramTable build_unigram(const Graph& g, double power) {
  if (!(power > 0.0)) throw NumericError("unigram power must be positive");
  if (g.edge_count() == 0) throw EmptyGraphError("unigram table needs a graph with edges");
  std::vector<double> weights(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    weights[v] = std::pow(static_cast<double>(g.degree(v)), power);
  }
  return UnigramTable(weights);
}

/// For each base vertex v, draws `per_vertex` candidates from the unigram
/// table and appends (v, c) whenever it is a non-edge of the full graph.
/// Candidates are added to the sample's vertex set.
inline SampledSubgraph negative_unigram(const Graph& g, SampledSubgraph sample,
                                        const UnigramTable& table, std::size_t per_vertex,
                                        Rng& rng) {
  std::vector<Vertex> members(sample.vertices);
  std::sort(members.begin(), members.end());
  const std::size_t base = sample.base_vertex_count;
  for (std::size_t i = 0; i < base; ++i) {
    const Vertex v = sample.vertices[i];
    for (std::size_t k = 0; k < per_vertex; ++k) {
      const Vertex c = table.sample(rng);
      if (c == v || g.has_edge(v, c)) continue;
      sample.negative_pairs.push_back({v, c});
      auto it = std::lower_bound(members.begin(), members.end(), c);
      if (it == members.end() || *it != c) {
        members.insert(it, c);
        sample.vertices.push_back(c);
      }
    }
  }
  sample.negative = NegativeMode::kUnigram;
  return sample;
}

/// The configured sampling routine: base algorithm followed by the negative
/// sampler. Holds the unigram table so it is built once per graph.
class Sampler {
 public:
  Sampler(const Graph& g, SamplerConfig config, std::vector<std::uint64_t> vertex_keys = {})
      : graph_(&g), config_(config), keys_(std::move(vertex_keys)) {
    if (auto v = config_.violations(); !v.empty()) throw ConfigError(std::move(v));
    if (config_.negative == NegativeMode::kUnigram) {
      table_ = build_unigram(g, config_.unigram_power);
    }
  }

  const SamplerConfig& config() const { return config_; }
  const Graph& graph() const { return *graph_; }

  SampledSubgraph operator()(Rng& rng) const {
    const Graph& g = *graph_;
    SampledSubgraph s;
    switch (config_.algorithm) {
      case SamplerAlgorithm::kRwSkipgram: s = rw_skipgram_sample(g, config_, rng); break;
      case SamplerAlgorithm::kRwInduced: s = rw_induced_sample(g, config_, rng); break;
      case SamplerAlgorithm::kPSampling: s = p_sample(g, config_.retention, rng, keys_); break;
      case SamplerAlgorithm::kUniformEdge: s = uniform_edge_sample(g, config_.edge_count, rng); break;
    }
    switch (config_.negative) {
      case NegativeMode::kNone:
        break;
      case NegativeMode::kInduced:
        s = negative_induced(g, std::move(s));
        break;
      case NegativeMode::kUnigram:
        s.negative_pairs.clear();
        s = negative_unigram(g, std::move(s), *table_, config_.negatives_per_vertex, rng);
        break;
    }
    return s;
  }

 private:
  const Graph* graph_;
  SamplerConfig config_;
  std::vector<std::uint64_t> keys_;
  std::optional<UnigramTable> table_;
};

/// One draw of the configured sampler. Builds the unigram table on each call;
/// prefer a `Sampler` instance for repeated draws.
inline SampledSubgraph draw(const Graph& g, const SamplerConfig& config, Rng& rng) {
  return Sampler(g, config)(rng);
}

}  // namespace relerm
