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

// Parameters, losses, and analytic gradients of the embedding models:
//   * edge structure: cross-entropy of sigma(<lambda_i, lambda_j>) on
//     sampled edges and non-edges,
//   * node classification: q * label cross-entropy of a logistic predictor
//     on the embeddings + (1 - q) * edge structure,
//   * category embeddings: vertex embedding = sum of its categories'
//     embeddings, trained on edge structure alone.
// All predicted probabilities are clipped to [eps, 1 - eps], which keeps
// every loss bounded.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relerm/error.hpp"
#include "relerm/graph.hpp"
#include "relerm/random.hpp"
#include "relerm/samplers.hpp"

namespace relerm {

/// theta = (global, embeddings). All parameters live in one contiguous
/// buffer laid out as
///   [vertex embeddings V*d | label weights L*d | label bias L | category embeddings C*d]
/// which is also the coordinate order of `flat()` and dense gradients.
class ParamStore {
 public:
  ParamStore() = default;

  ParamStore(std::size_t vertex_count, std::size_t dim, std::size_t label_dim = 0,
             std::size_t category_count = 0)
      : vertex_count_(vertex_count),
        dim_(dim),
        label_dim_(label_dim),
        category_count_(category_count),
        data_(vertex_count * dim + label_dim * dim + label_dim + category_count * dim, 0.0) {}

  /// Embeddings uniform on [-0.5/d, 0.5/d], global weights zero. Each
  /// coordinate is a pure function of (seed, key, coordinate), so values do
  /// not depend on visiting order; `keys` (default: the vertex id) lets two
  /// stores over different graphs share the initialization of a vertex.
  static ParamStore initialized(std::size_t vertex_count, std::size_t dim,
                                std::size_t label_dim, std::size_t category_count,
                                std::uint64_t seed, std::span<const std::uint64_t> keys = {}) {
    ParamStore p(vertex_count, dim, label_dim, category_count);
    p.seed_ = seed;
    const double half_width = 0.5 / static_cast<double>(dim);
    auto coordinate = [&](std::uint64_t key, std::size_t k) {
      return (2.0 * unit_from_bits(hash_key(seed, key, k)) - 1.0) * half_width;
    };
    for (Vertex v = 0; v < vertex_count; ++v) {
      const std::uint64_t key = keys.empty() ? v : keys[v];
      auto row = p.embedding(v);
      for (std::size_t k = 0; k < dim; ++k) row[k] = coordinate(key, k);
    }
    constexpr std::uint64_t kCategoryTag = 1ULL << 63;
    for (std::size_t c = 0; c < category_count; ++c) {
      auto row = p.category(c);
      for (std::size_t k = 0; k < dim; ++k) row[k] = coordinate(kCategoryTag | c, k);
    }
    return p;
  }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t dim() const { return dim_; }
  std::size_t label_dim() const { return label_dim_; }
  std::size_t category_count() const { return category_count_; }
  std::uint64_t init_seed() const { return seed_; }
  void set_init_seed(std::uint64_t seed) { seed_ = seed; }

  std::span<double> embedding(Vertex v) { return {data_.data() + v * dim_, dim_}; }
  std::span<const double> embedding(Vertex v) const { return {data_.data() + v * dim_, dim_}; }

  std::span<double> weights(std::size_t label) {
    return {data_.data() + weights_offset() + label * dim_, dim_};
  }
  std::span<const double> weights(std::size_t label) const {
    return {data_.data() + weights_offset() + label * dim_, dim_};
  }
  double& bias(std::size_t label) { return data_[bias_offset() + label]; }
  double bias(std::size_t label) const { return data_[bias_offset() + label]; }

  std::span<double> category(std::size_t c) {
    return {data_.data() + category_offset() + c * dim_, dim_};
  }
  std::span<const double> category(std::size_t c) const {
    return {data_.data() + category_offset() + c * dim_, dim_};
  }

  // Global parameters (weights followed by bias).
  std::span<double> global() {
    return {data_.data() + weights_offset(), label_dim_ * dim_ + label_dim_};
  }
  std::span<const double> global() const {
    return {data_.data() + weights_offset(), label_dim_ * dim_ + label_dim_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  std::size_t weights_offset() const { return vertex_count_ * dim_; }
  std::size_t bias_offset() const { return weights_offset() + label_dim_ * dim_; }
  std::size_t category_offset() const { return bias_offset() + label_dim_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::size_t vertex_count_ = 0;
  std::size_t dim_ = 0;
  std::size_t label_dim_ = 0;
  std::size_t category_count_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;
};

enum class LossMode { kEdgeOnly, kNodeClassification, kCategoryEmbedding };

inline std::string_view to_string(LossMode m) {
  switch (m) {
    case LossMode::kEdgeOnly: return "edge_only";
    case LossMode::kNodeClassification: return "node_classification";
    case LossMode::kCategoryEmbedding: return "category_embedding";
  }
  return "?";
}
inline std::optional<LossMode> parse_loss_mode(std::string_view s) {
  for (auto m : {LossMode::kEdgeOnly, LossMode::kNodeClassification, LossMode::kCategoryEmbedding}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct LossConfig {
  double q = 0.0;  // weight of the label term
  double eps = 1e-7;
  LossMode mode = LossMode::kEdgeOnly;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(q >= 0.0 && q <= 1.0)) out.push_back("loss.q must lie in [0,1]");
    if (!(eps > 0.0 && eps < 0.5)) out.push_back("loss.eps must lie in (0,0.5)");
    return out;
  }
};

/// Vertex annotations a loss may read.
struct Annotations {
  const LabelTable* labels = nullptr;
  const CategoryMap* categories = nullptr;
};

/// Gradient restricted to the parameters a sample touches.
struct SparseGradient {
  std::size_t dim = 0;
  std::vector<Vertex> vertices;
  std::vector<double> vertex_values;  // vertices.size() * dim
  std::vector<std::uint32_t> categories;
  std::vector<double> category_values;  // categories.size() * dim
  std::vector<double> global;           // L*d weights then L bias, or empty

  std::span<const double> vertex_row(std::size_t i) const {
    return {vertex_values.data() + i * dim, dim};
  }
  std::span<const double> category_row(std::size_t i) const {
    return {category_values.data() + i * dim, dim};
  }

  bool all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(vertex_values.begin(), vertex_values.end(), finite) &&
           std::all_of(category_values.begin(), category_values.end(), finite) &&
           std::all_of(global.begin(), global.end(), finite);
  }

  /// Scatters into a vector laid out like `ParamStore::flat()`.
  std::vector<double> to_dense(const ParamStore& shape) const {
    std::vector<double> out(shape.flat().size(), 0.0);
    add_to(out, shape, 1.0);
    return out;
  }

  void add_to(std::span<double> flat, const ParamStore& shape, double scale) const {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      auto row = vertex_row(i);
      const std::size_t base = static_cast<std::size_t>(vertices[i]) * dim;
      for (std::size_t k = 0; k < dim; ++k) flat[base + k] += scale * row[k];
    }
    for (std::size_t i = 0; i < global.size(); ++i) {
      flat[shape.weights_offset() + i] += scale * global[i];
    }
    for (std::size_t i = 0; i < categories.size(); ++i) {
      auto row = category_row(i);
      const std::size_t base = shape.category_offset() + categories[i] * dim;
      for (std::size_t k = 0; k < dim; ++k) flat[base + k] += scale * row[k];
    }
  }
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// -log of the clipped probability that a binary outcome is `positive`, and
// the derivative with respect to the logit (zero inside the clipped region).
struct BinaryTerm {
  double loss;
  double dlogit;
};

inline BinaryTerm binary_cross_entropy(double logit, bool positive, double eps) {
  const double p = sigmoid(logit);
  const bool clipped = p <= eps || p >= 1.0 - eps;
  const double pc = std::clamp(p, eps, 1.0 - eps);
  if (positive) return {-std::log(pc), clipped ? 0.0 : p - 1.0};
  return {-std::log1p(-pc), clipped ? 0.0 : p};
}

// Loss and (optionally) gradient for every mode. The edge and label terms are
// reported separately so the public wrappers can expose either.
struct Evaluation {
  double edge = 0.0;
  double label = 0.0;
  double total = 0.0;
};

inline void require_finite(std::span<const double> row, Vertex v) {
  for (double x : row) {
    if (!std::isfinite(x)) {
      throw NumericError("non-finite embedding for vertex " + std::to_string(v));
    }
  }
}

inline Evaluation evaluate(const SampledSubgraph& sample, const Annotations& ann,
                           const ParamStore& params, const LossConfig& config,
                           SparseGradient* grad) {
  const std::size_t d = params.dim();
  const bool category_mode = config.mode == LossMode::kCategoryEmbedding;
  const bool label_mode = config.mode == LossMode::kNodeClassification;
  if (category_mode && ann.categories == nullptr) {
    throw Error("invalid_argument", "category_embedding loss needs a CategoryMap");
  }
  if (label_mode && config.q > 0.0 && ann.labels == nullptr) {
    throw Error("invalid_argument", "node_classification loss with q > 0 needs labels");
  }

  // Slots for every vertex the sample mentions.
  std::unordered_map<Vertex, std::size_t> slot;
  std::vector<Vertex> touched;
  auto slot_of = [&](Vertex v) {
    auto [it, inserted] = slot.try_emplace(v, touched.size());
    if (inserted) touched.push_back(v);
    return it->second;
  };
  for (Vertex v : sample.vertices) slot_of(v);
  for (const auto& pr : sample.positive_pairs) slot_of(pr.u), slot_of(pr.v);
  for (const auto& pr : sample.negative_pairs) slot_of(pr.u), slot_of(pr.v);

  // Embedding rows; category mode materializes sums.
  std::vector<double> derived;
  std::vector<std::span<const double>> emb(touched.size());
  if (category_mode) {
    derived.assign(touched.size() * d, 0.0);
    for (std::size_t i = 0; i < touched.size(); ++i) {
      double* row = derived.data() + i * d;
      for (auto c : ann.categories->categories(touched[i])) {
        auto gc = params.category(c);
        for (std::size_t k = 0; k < d; ++k) row[k] += gc[k];
      }
      emb[i] = {row, d};
    }
  } else {
    for (std::size_t i = 0; i < touched.size(); ++i) emb[i] = params.embedding(touched[i]);
  }
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (!category_mode) require_finite(emb[i], touched[i]);
  }

  std::vector<double> vgrad(grad ? touched.size() * d : 0, 0.0);
  Evaluation ev;

  const double edge_weight = label_mode ? 1.0 - config.q : 1.0;
  auto edge_term = [&](const VertexPair& pr, bool positive) {
    const std::size_t a = slot.at(pr.u), b = slot.at(pr.v);
    const double s = dot(emb[a], emb[b]);
    if (!std::isfinite(s)) throw NumericError("non-finite edge logit");
    const auto term = binary_cross_entropy(s, positive, config.eps);
    ev.edge += term.loss;
    if (grad && term.dlogit != 0.0) {
      const double g = edge_weight * term.dlogit;
      for (std::size_t k = 0; k < d; ++k) {
        vgrad[a * d + k] += g * emb[b][k];
        vgrad[b * d + k] += g * emb[a][k];
      }
    }
  };
  for (const auto& pr : sample.positive_pairs) edge_term(pr, true);
  for (const auto& pr : sample.negative_pairs) edge_term(pr, false);

  const std::size_t L = params.label_dim();
  if (grad && label_mode) grad->global.assign(L * d + L, 0.0);
  if (label_mode && config.q > 0.0) {
    const LabelTable& labels = *ann.labels;
    if (labels.label_dim() != L) {
      throw Error("invalid_argument", "label table and parameter store disagree on label_dim");
    }
    for (Vertex v : sample.base_vertices()) {
      if (!labels.observed(v)) continue;
      const std::size_t a = slot.at(v);
      for (std::size_t j = 0; j < L; ++j) {
        const auto w = params.weights(j);
        const double z = dot(w, emb[a]) + params.bias(j);
        const auto term = binary_cross_entropy(z, labels.has(v, j), config.eps);
        ev.label += term.loss;
        if (grad && term.dlogit != 0.0) {
          const double g = config.q * term.dlogit;
          for (std::size_t k = 0; k < d; ++k) {
            grad->global[j * d + k] += g * emb[a][k];
            vgrad[a * d + k] += g * w[k];
          }
          grad->global[L * d + j] += g;
        }
      }
    }
  }
  ev.total = label_mode ? config.q * ev.label + (1.0 - config.q) * ev.edge : ev.edge;
  if (!std::isfinite(ev.total)) throw NumericError("non-finite loss");

  if (grad) {
    grad->dim = d;
    if (category_mode) {
      std::unordered_map<std::uint32_t, std::size_t> cslot;
      for (std::size_t i = 0; i < touched.size(); ++i) {
        for (auto c : ann.categories->categories(touched[i])) {
          auto [it, inserted] = cslot.try_emplace(c, grad->categories.size());
          if (inserted) {
            grad->categories.push_back(c);
            grad->category_values.resize(grad->categories.size() * d, 0.0);
          }
          for (std::size_t k = 0; k < d; ++k) {
            grad->category_values[it->second * d + k] += vgrad[i * d + k];
          }
        }
      }
    } else {
      grad->vertices = std::move(touched);
      grad->vertex_values = std::move(vgrad);
    }
    if (!grad->all_finite()) throw NumericError("non-finite gradient");
  }
  return ev;
}

}  // namespace detail

/// Edge-structure cross-entropy summed over the sample's pairs (with
/// multiplicity). In category mode, embeddings are category sums.
inline double edge_loss(const SampledSubgraph& sample, const ParamStore& params,
                        const LossConfig& config, const CategoryMap* categories = nullptr) {
  LossConfig edge_config = config;
  if (edge_config.mode == LossMode::kNodeClassification) edge_config.mode = LossMode::kEdgeOnly;
  return detail::evaluate(sample, {nullptr, categories}, params, edge_config, nullptr).edge;
}

/// Label cross-entropy of the logistic predictor over the sample's observed
/// (mask = true) base vertices. Unweighted by q.
inline double label_loss(const SampledSubgraph& sample, const LabelTable& labels,
                         const ParamStore& params, const LossConfig& config) {
  LossConfig label_config = config;
  label_config.mode = LossMode::kNodeClassification;
  label_config.q = 1.0;
  return detail::evaluate(sample, {&labels, nullptr}, params, label_config, nullptr).label;
}

/// q * label_loss + (1 - q) * edge_loss.
inline double combined_loss(const SampledSubgraph& sample, const LabelTable& labels,
                            const ParamStore& params, const LossConfig& config) {
  LossConfig c = config;
  c.mode = LossMode::kNodeClassification;
  return detail::evaluate(sample, {&labels, nullptr}, params, c, nullptr).total;
}

/// Loss of the configured mode.
inline double loss(const SampledSubgraph& sample, const Annotations& ann,
                   const ParamStore& params, const LossConfig& config) {
  return detail::evaluate(sample, ann, params, config, nullptr).total;
}

/// Exact gradient of `loss(sample, ann, params, config)`.
inline SparseGradient gradient(const SampledSubgraph& sample, const Annotations& ann,
                               const ParamStore& params, const LossConfig& config) {
  SparseGradient g;
  detail::evaluate(sample, ann, params, config, &g);
  return g;
}

inline double loss_and_gradient(const SampledSubgraph& sample, const Annotations& ann,
                                const ParamStore& params, const LossConfig& config,
                                SparseGradient& out) {
  out = SparseGradient{};
  return detail::evaluate(sample, ann, params, config, &out).total;
}

/// Sum of the vertex's category embeddings (zero if it has none).
inline std::vector<double> category_vertex_embedding(Vertex v, const CategoryMap& categories,
                                                     const ParamStore& params) {
  std::vector<double> out(params.dim(), 0.0);
  for (auto c : categories.categories(v)) {
    auto row = params.category(c);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
  }
  return out;
}

/// Per-label probabilities f(lambda_v; gamma).
inline std::vector<double> label_probabilities(const ParamStore& params,
                                               std::span<const double> embedding) {
  std::vector<double> out(params.label_dim());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = detail::sigmoid(detail::dot(params.weights(j), embedding) + params.bias(j));
  }
  return out;
}

/// params -= step * grad on the touched entries only.
inline void apply_gradient(ParamStore& params, const SparseGradient& grad, double step) {
  grad.add_to(params.flat(), params, -step);
}

// ---------------------------------------------------------------------------
// Persistence

/// Tab-separated "id v_1 ... v_d", one line per vertex.
inline void export_embeddings(std::ostream& out, const ParamStore& params,
                              std::span<const std::uint64_t> original_ids = {}) {
  out << std::setprecision(17);
  for (Vertex v = 0; v < params.vertex_count(); ++v) {
    if (original_ids.empty()) out << v; else out << original_ids[v];
    for (double x : params.embedding(v)) out << '\t' << x;
    out << '\n';
  }
}

inline void export_category_embeddings(std::ostream& out, const ParamStore& params) {
  out << std::setprecision(17);
  for (std::size_t c = 0; c < params.category_count(); ++c) {
    out << c;
    for (double x : params.category(c)) out << '\t' << x;
    out << '\n';
  }
}

// Checkpoint layout (little-endian): magic "RERMPRMS" | u32 version |
// u32 reserved | u64 V | u64 d | u64 L | u64 C | u64 init_seed | f64 data[...]
inline constexpr std::array<char, 8> kCheckpointMagic = {'R', 'E', 'R', 'M', 'P', 'R', 'M', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const ParamStore& params) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, 0);
  detail::put_le<std::uint64_t>(out, params.vertex_count());
  detail::put_le<std::uint64_t>(out, params.dim());
  detail::put_le<std::uint64_t>(out, params.label_dim());
  detail::put_le<std::uint64_t>(out, params.category_count());
  detail::put_le<std::uint64_t>(out, params.init_seed());
  for (double x : params.flat()) detail::put_f64(out, x);
}

inline ParamStore read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw FormatError("not a parameter checkpoint (bad magic)");
  }
  auto version = detail::get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  detail::get_le<std::uint32_t>(in);
  auto V = detail::get_le<std::uint64_t>(in);
  auto d = detail::get_le<std::uint64_t>(in);
  auto L = detail::get_le<std::uint64_t>(in);
  auto C = detail::get_le<std::uint64_t>(in);
  auto seed = detail::get_le<std::uint64_t>(in);
  ParamStore p(V, d, L, C);
  p.set_init_seed(seed);
  for (double& x : p.flat()) x = detail::get_f64(in);
  return p;
}

}  // namespace relerm
