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

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relerm/error.hpp"

namespace relerm {

using Vertex = std::uint32_t;

/// Unordered vertex pair. Inside a Graph's edge list `u < v` always holds;
/// sampled pairs keep the orientation they were produced in.
struct VertexPair {
  Vertex u = 0;
  Vertex v = 0;

  VertexPair normalized() const { return u < v ? *this : VertexPair{v, u}; }
  friend auto operator<=>(const VertexPair&, const VertexPair&) = default;
};

/// Immutable undirected simple graph in compressed adjacency form.
class Graph {
 public:
  Graph() : offsets_(1, 0) {}

  /// Builds a graph from arbitrary undirected pairs: orientation is ignored,
  /// duplicates are merged, self-loops are dropped.
  static Graph from_pairs(std::size_t vertex_count,
                          std::span<const VertexPair> pairs) {
    std::vector<VertexPair> edges;
    edges.reserve(pairs.size());
    for (const auto& pair : pairs) {
      if (pair.u >= vertex_count || pair.v >= vertex_count) {
        throw IndexError(std::max(pair.u, pair.v),
                         "edge endpoint out of range");
      }
      if (pair.u != pair.v) edges.push_back(pair.normalized());
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return from_normalized_edges(vertex_count, std::move(edges));
  }

  static Graph from_pairs(std::size_t vertex_count,
                          std::initializer_list<VertexPair> pairs) {
    return from_pairs(vertex_count,
                      std::span<const VertexPair>(pairs.begin(), pairs.size()));
  }

  /// `edges` must be sorted, unique, and satisfy u < v < vertex_count.
  static Graph from_normalized_edges(std::size_t vertex_count,
                                     std::vector<VertexPair> edges) {
    Graph g;
    g.offsets_.assign(vertex_count + 1, 0);
    for (const auto& e : edges) {
      ++g.offsets_[e.u + 1];
      ++g.offsets_[e.v + 1];
    }
    std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
    g.adjacency_.resize(2 * edges.size());
    std::vector<std::uint64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    // Edges are sorted by (u, v): the first pass fills each row's smaller
    // neighbors in ascending order, the second its larger ones.
    for (const auto& e : edges) g.adjacency_[cursor[e.v]++] = e.u;
    for (const auto& e : edges) g.adjacency_[cursor[e.u]++] = e.v;
    g.edges_ = std::move(edges);
    return g;
  }

  // No invariant checks; used by the binary reader (which validates
  // afterwards) and by tests that need malformed graphs.
  static Graph from_parts_unchecked(std::vector<std::uint64_t> offsets,
                                    std::vector<Vertex> adjacency,
                                    std::vector<VertexPair> edges) {
    Graph g;
    g.offsets_ = std::move(offsets);
    g.adjacency_ = std::move(adjacency);
    g.edges_ = std::move(edges);
    return g;
  }

  std::size_t vertex_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v],
            static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
  }
  std::size_t degree(Vertex v) const {
    return static_cast<std::size_t>(offsets_[v + 1] - offsets_[v]);
  }

  bool has_edge(Vertex u, Vertex v) const {
    if (u == v) return false;
    if (degree(u) > degree(v)) std::swap(u, v);
    auto row = neighbors(u);
    return std::binary_search(row.begin(), row.end(), v);
  }

  std::span<const VertexPair> edges() const { return edges_; }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<Vertex>& adjacency() const { return adjacency_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<Vertex> adjacency_;
  std::vector<VertexPair> edges_;
};

// ---------------------------------------------------------------------------
// Validation

enum class Violation {
  kOffsets,
  kOutOfRange,
  kSelfLoop,
  kUnsorted,
  kDuplicate,
  kAsymmetric,
  kDegreeSum,
  kEdgeList,
};

struct ValidationIssue {
  Violation kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(Violation kind) const {
    return std::any_of(issues.begin(), issues.end(),
                       [kind](const auto& i) { return i.kind == kind; });
  }
};

/// Lists every violated Graph invariant; an empty report means valid.
inline ValidationReport validate(const Graph& g) {
  ValidationReport report;
  auto add = [&](Violation kind, std::string msg) {
    report.issues.push_back({kind, std::move(msg)});
  };
  const auto& off = g.offsets();
  const auto& adj = g.adjacency();
  if (off.empty() || off.front() != 0 || off.back() != adj.size() ||
      !std::is_sorted(off.begin(), off.end())) {
    add(Violation::kOffsets, "offsets are not a monotone prefix over the adjacency block");
    return report;  // rows cannot be read safely
  }
  const std::size_t n = g.vertex_count();
  bool rows_in_range = true;
  for (Vertex v = 0; v < n; ++v) {
    auto row = g.neighbors(v);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= n) {
        add(Violation::kOutOfRange, "vertex " + std::to_string(v) +
                                        " has out-of-range neighbor " +
                                        std::to_string(row[i]));
        rows_in_range = false;
        continue;
      }
      if (row[i] == v) {
        add(Violation::kSelfLoop, "self-loop at vertex " + std::to_string(v));
      }
      if (i > 0 && row[i] == row[i - 1]) {
        add(Violation::kDuplicate, "duplicate edge (" + std::to_string(v) +
                                       "," + std::to_string(row[i]) + ")");
      } else if (i > 0 && row[i] < row[i - 1]) {
        add(Violation::kUnsorted,
            "neighbor list of vertex " + std::to_string(v) + " is not ascending");
      }
    }
  }
  if (rows_in_range) {
    for (Vertex v = 0; v < n; ++v) {
      for (Vertex w : g.neighbors(v)) {
        auto back = g.neighbors(w);
        if (std::find(back.begin(), back.end(), v) == back.end()) {
          add(Violation::kAsymmetric, "edge (" + std::to_string(v) + "," +
                                          std::to_string(w) +
                                          ") has no reverse entry");
        }
      }
    }
  }
  if (adj.size() != 2 * g.edge_count()) {
    add(Violation::kDegreeSum, "sum of degrees " + std::to_string(adj.size()) +
                                   " != 2 * edge_count " +
                                   std::to_string(2 * g.edge_count()));
  }
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!(e.u < e.v) || e.v >= n) {
      add(Violation::kEdgeList, "edge list entry " + std::to_string(i) +
                                    " is not an in-range pair with u < v");
      continue;
    }
    if (i > 0 && !(edges[i - 1] < e)) {
      add(edges[i - 1] == e ? Violation::kDuplicate : Violation::kEdgeList,
          "edge list is not strictly ascending at entry " + std::to_string(i));
    }
    if (rows_in_range) {
      auto row = g.neighbors(e.u);
      if (std::find(row.begin(), row.end(), e.v) == row.end()) {
        add(Violation::kEdgeList, "edge list entry " + std::to_string(i) +
                                      " missing from adjacency");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Induced subgraphs

struct InducedPairs {
  std::vector<VertexPair> positives;
  std::vector<VertexPair> negatives;
};

/// Splits all unordered pairs of the (deduplicated) vertex set into induced
/// edges and induced non-edges. Pairs are reported with u < v.
inline InducedPairs induced_pairs(const Graph& g, std::span<const Vertex> vertices) {
  std::vector<Vertex> set(vertices.begin(), vertices.end());
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  InducedPairs out;
  for (std::size_t a = 0; a < set.size(); ++a) {
    if (set[a] >= g.vertex_count()) throw IndexError(set[a], "vertex out of range");
    for (std::size_t b = a + 1; b < set.size(); ++b) {
      VertexPair pair{set[a], set[b]};
      (g.has_edge(set[a], set[b]) ? out.positives : out.negatives).push_back(pair);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text ingestion

struct LoadOptions {
  bool deduplicate = true;
  bool drop_self_loops = true;
  bool largest_component_only = false;
};

/// A loaded graph plus the dense-index -> original-id map.
struct LoadedGraph {
  Graph graph;
  std::vector<std::uint64_t> original_ids;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Splits on whitespace; '#' starts a comment.
inline std::vector<std::string_view> tokens(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) {
    line = line.substr(0, hash);
  }
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::uint64_t parse_index(std::string_view token, std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, "expected a non-negative integer, got '" +
                               std::string(token) + "'");
  }
  return value;
}

// Reads "a b" integer pairs, one per nonblank non-comment line.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> read_int_pairs(
    std::istream& in) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokens(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) {
      throw ParseError(line_no, "expected two integers, found " +
                                    std::to_string(toks.size()) + " fields");
    }
    rows.emplace_back(parse_index(toks[0], line_no), parse_index(toks[1], line_no));
  }
  return rows;
}

// Component labels by union-find; returns the root of each vertex.
inline std::vector<Vertex> components(std::size_t n, std::span<const VertexPair> edges) {
  std::vector<Vertex> parent(n);
  std::iota(parent.begin(), parent.end(), Vertex{0});
  auto find = [&](Vertex x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) {
    auto a = find(e.u), b = find(e.v);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  for (Vertex v = 0; v < n; ++v) parent[v] = find(v);
  return parent;
}

}  // namespace detail

/// Parses a whitespace-separated "u v" edge list. Input edges are treated as
/// undirected; vertices are relabeled densely in ascending original-id order.
inline LoadedGraph load_edge_list(std::istream& in, const LoadOptions& options = {}) {
  auto rows = detail::read_int_pairs(in);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> kept;
  kept.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [a, b] = rows[i];
    if (a == b) {
      if (options.drop_self_loops) continue;
      throw ParseError(i + 1, "self-loop on vertex " + std::to_string(a));
    }
    kept.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::vector<std::uint64_t> ids;
  ids.reserve(2 * kept.size());
  for (auto [a, b] : kept) {
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw EmptyGraphError("edge list contains no edges");

  auto dense = [&](std::uint64_t id) {
    return static_cast<Vertex>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<VertexPair> edges;
  edges.reserve(kept.size());
  for (auto [a, b] : kept) edges.push_back({dense(a), dense(b)});
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    if (!options.deduplicate) {
      throw ParseError(0, "duplicate edge (" + std::to_string(ids[dup->u]) + "," +
                              std::to_string(ids[dup->v]) + ")");
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  if (options.largest_component_only) {
    auto root = detail::components(ids.size(), edges);
    std::vector<std::size_t> size(ids.size(), 0);
    for (Vertex r : root) ++size[r];
    // Ties go to the component holding the smallest original id.
    Vertex best = static_cast<Vertex>(
        std::max_element(size.begin(), size.end()) - size.begin());
    std::vector<std::uint64_t> kept_ids;
    std::vector<Vertex> remap(ids.size(), 0);
    for (Vertex v = 0; v < ids.size(); ++v) {
      if (root[v] == best) {
        remap[v] = static_cast<Vertex>(kept_ids.size());
        kept_ids.push_back(ids[v]);
      }
    }
    std::vector<VertexPair> kept_edges;
    for (const auto& e : edges) {
      if (root[e.u] == best) kept_edges.push_back({remap[e.u], remap[e.v]});
    }
    ids = std::move(kept_ids);
    edges = std::move(kept_edges);
  }
  return {Graph::from_normalized_edges(ids.size(), std::move(edges)), std::move(ids)};
}

/// Writes "u v" lines, one per undirected edge, using original ids if given.
inline void write_edge_list(std::ostream& out, const Graph& g,
                            std::span<const std::uint64_t> original_ids = {}) {
  for (const auto& e : g.edges()) {
    if (original_ids.empty()) {
      out << e.u << ' ' << e.v << '\n';
    } else {
      out << original_ids[e.u] << ' ' << original_ids[e.v] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Vertex annotations

/// Per-vertex multi-label bitsets plus a "label observed at training time" mask.
class LabelTable {
 public:
  LabelTable() = default;
  LabelTable(std::size_t vertex_count, std::size_t label_dim)
      : label_dim_(label_dim),
        bits_(vertex_count * label_dim, 0),
        mask_(vertex_count, 1) {}

  std::size_t label_dim() const { return label_dim_; }
  std::size_t vertex_count() const { return mask_.size(); }

  bool has(Vertex v, std::size_t label) const { return bits_[v * label_dim_ + label] != 0; }
  void set(Vertex v, std::size_t label, bool on = true) {
    bits_[v * label_dim_ + label] = on ? 1 : 0;
  }
  std::span<const std::uint8_t> row(Vertex v) const {
    return {bits_.data() + v * label_dim_, label_dim_};
  }

  bool observed(Vertex v) const { return mask_[v] != 0; }
  void set_observed(Vertex v, bool on) { mask_[v] = on ? 1 : 0; }

  std::size_t count(Vertex v) const {
    auto r = row(v);
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
  }

  friend bool operator==(const LabelTable&, const LabelTable&) = default;

 private:
  std::size_t label_dim_ = 0;
  std::vector<std::uint8_t> bits_;
  std::vector<std::uint8_t> mask_;
};

/// Per-vertex category memberships, stored row-compressed.
class CategoryMap {
 public:
  CategoryMap() : offsets_(1, 0) {}

  static CategoryMap from_memberships(std::size_t vertex_count, std::size_t category_count,
                                      std::vector<std::pair<Vertex, std::uint32_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    CategoryMap m;
    m.category_count_ = category_count;
    m.offsets_.assign(vertex_count + 1, 0);
    for (auto [v, c] : pairs) {
      if (v >= vertex_count) throw IndexError(v, "category vertex out of range");
      if (c >= category_count) throw IndexError(c, "category index out of range");
      ++m.offsets_[v + 1];
      m.members_.push_back(c);
    }
    std::partial_sum(m.offsets_.begin(), m.offsets_.end(), m.offsets_.begin());
    return m;
  }

  std::size_t category_count() const { return category_count_; }
  std::size_t vertex_count() const { return offsets_.size() - 1; }
  std::span<const std::uint32_t> categories(Vertex v) const {
    return {members_.data() + offsets_[v],
            static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
  }

 private:
  std::size_t category_count_ = 0;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> members_;
};

namespace detail {

// Resolves a vertex token either as a dense index (no id map) or through the
// original-id map. Returns false for ids the map does not know (e.g. vertices
// dropped by the largest-component filter).
inline bool resolve_vertex(std::uint64_t raw, const Graph& g,
                           std::span<const std::uint64_t> original_ids, std::size_t line,
                           Vertex& out) {
  if (original_ids.empty()) {
    if (raw >= g.vertex_count()) {
      throw IndexError(raw, "line " + std::to_string(line) + ": vertex " +
                                std::to_string(raw) + " out of range");
    }
    out = static_cast<Vertex>(raw);
    return true;
  }
  auto it = std::lower_bound(original_ids.begin(), original_ids.end(), raw);
  if (it == original_ids.end() || *it != raw) return false;
  out = static_cast<Vertex>(it - original_ids.begin());
  return true;
}

}  // namespace detail

/// Parses "vertex label" lines. Every vertex starts observed with no labels.
inline LabelTable load_labels(std::istream& in, const Graph& g, std::size_t label_dim,
                              std::span<const std::uint64_t> original_ids = {}) {
  LabelTable table(g.vertex_count(), label_dim);
  auto rows = detail::read_int_pairs(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [raw_v, label] = rows[i];
    if (label >= label_dim) {
      throw IndexError(label, "line " + std::to_string(i + 1) + ": label " +
                                  std::to_string(label) + " >= label_dim " +
                                  std::to_string(label_dim));
    }
    Vertex v = 0;
    if (detail::resolve_vertex(raw_v, g, original_ids, i + 1, v)) table.set(v, label);
  }
  return table;
}

inline CategoryMap load_categories(std::istream& in, const Graph& g,
                                   std::size_t category_count,
                                   std::span<const std::uint64_t> original_ids = {}) {
  auto rows = detail::read_int_pairs(in);
  std::vector<std::pair<Vertex, std::uint32_t>> pairs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [raw_v, c] = rows[i];
    if (c >= category_count) {
      throw IndexError(c, "line " + std::to_string(i + 1) + ": category out of range");
    }
    Vertex v = 0;
    if (detail::resolve_vertex(raw_v, g, original_ids, i + 1, v)) {
      pairs.emplace_back(v, static_cast<std::uint32_t>(c));
    }
  }
  return CategoryMap::from_memberships(g.vertex_count(), category_count, std::move(pairs));
}

// ---------------------------------------------------------------------------
// Binary cache
//
// Layout (all integers little-endian):
//   magic "RERMGRPH" | u32 version | u32 reserved | u64 vertex_count |
//   u64 edge_count | u64 offsets[V+1] | u32 neighbors[2E] | u32 edges[2E]

inline constexpr std::array<char, 8> kGraphMagic = {'R', 'E', 'R', 'M', 'G', 'R', 'P', 'H'};
inline constexpr std::uint32_t kGraphCacheVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  static_assert(std::is_unsigned_v<T>);
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw FormatError("unexpected end of binary stream");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

inline void put_f64(std::ostream& out, double x) { put_le(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace detail

inline void write_graph_cache(std::ostream& out, const Graph& g) {
  out.write(kGraphMagic.data(), kGraphMagic.size());
  detail::put_le<std::uint32_t>(out, kGraphCacheVersion);
  detail::put_le<std::uint32_t>(out, 0);
  detail::put_le<std::uint64_t>(out, g.vertex_count());
  detail::put_le<std::uint64_t>(out, g.edge_count());
  for (auto o : g.offsets()) detail::put_le<std::uint64_t>(out, o);
  for (auto v : g.adjacency()) detail::put_le<std::uint32_t>(out, v);
  for (const auto& e : g.edges()) {
    detail::put_le<std::uint32_t>(out, e.u);
    detail::put_le<std::uint32_t>(out, e.v);
  }
}

inline Graph read_graph_cache(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kGraphMagic) {
    throw FormatError("not a graph cache (bad magic)");
  }
  auto version = detail::get_le<std::uint32_t>(in);
  if (version != kGraphCacheVersion) {
    throw FormatError("unsupported graph cache version " + std::to_string(version));
  }
  detail::get_le<std::uint32_t>(in);
  auto n = detail::get_le<std::uint64_t>(in);
  auto m = detail::get_le<std::uint64_t>(in);
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = detail::get_le<std::uint64_t>(in);
  std::vector<Vertex> adjacency(2 * m);
  for (auto& v : adjacency) v = detail::get_le<std::uint32_t>(in);
  std::vector<VertexPair> edges(m);
  for (auto& e : edges) {
    e.u = detail::get_le<std::uint32_t>(in);
    e.v = detail::get_le<std::uint32_t>(in);
  }
  auto g = Graph::from_parts_unchecked(std::move(offsets), std::move(adjacency), std::move(edges));
  if (auto report = validate(g); !report.ok()) {
    throw FormatError("graph cache fails validation: " + report.issues.front().message);
  }
  return g;
}

/// Original-id map written next to the cache: one "dense original" line per vertex.
inline void write_id_map(std::ostream& out, std::span<const std::uint64_t> ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) out << i << ' ' << ids[i] << '\n';
}

inline std::vector<std::uint64_t> read_id_map(std::istream& in) {
  auto rows = detail::read_int_pairs(in);
  std::vector<std::uint64_t> ids(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) throw ParseError(i + 1, "id map rows must be dense and ordered");
    ids[i] = rows[i].second;
  }
  return ids;
}

}  // namespace relerm
