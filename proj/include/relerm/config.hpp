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

// Experiment configuration: a flat "dotted.key = value" file ('#' starts a
// comment), with command-line overrides applied key for key. Validation
// collects every violation before anything runs.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "relerm/error.hpp"
#include "relerm/eval.hpp"
#include "relerm/graphex.hpp"
#include "relerm/samplers.hpp"
#include "relerm/trainer.hpp"

namespace relerm {

using RawConfig = std::map<std::string, std::string>;

/// Parses the config text; malformed and duplicate lines are collected into
/// `violations` rather than thrown.
inline RawConfig parse_config_text(std::istream& in, std::vector<std::string>& violations) {
  RawConfig raw;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto body = detail::trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      violations.push_back("line " + std::to_string(no) + ": expected 'key = value'");
      continue;
    }
    std::string key(detail::trim(body.substr(0, eq)));
    std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty()) {
      violations.push_back("line " + std::to_string(no) + ": empty key");
      continue;
    }
    if (!raw.emplace(key, value).second) {
      violations.push_back("line " + std::to_string(no) + ": duplicate key '" + key + "'");
    }
  }
  return raw;
}

enum class Experiment { kEdgeCount, kRiskConvergence, kStability, kGlobalParam };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::kEdgeCount: return "edge_count";
    case Experiment::kRiskConvergence: return "risk_convergence";
    case Experiment::kStability: return "stability";
    case Experiment::kGlobalParam: return "global_param";
  }
  return "?";
}

struct SimulateSettings {
  Experiment experiment = Experiment::kEdgeCount;
  std::string graphon = "exponential";
  double constant = 0.5;
  std::vector<double> sizes{100};
  std::size_t replicates = 20;
  double delta = 10.0;
  double sample_size = 10.0;
  std::size_t risk_samples = 2000;
  double steps_per_size = 20.0;
  std::size_t mark_dim = 4;
  double mark_scale = 0.5;
  double mark_noise = 0.1;
  double label_intercept = 0.0;
  double label_slope = 0.0;
  double point_budget = kDefaultPointBudget;
};

struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  std::string graph_path;
  std::string graph_format = "edge_list";  // edge_list | cache
  LoadOptions load;
  std::string labels_path;
  std::size_t label_dim = 0;
  std::string categories_path;
  std::size_t category_count = 0;
  std::string output_dir = "out";
  std::string dataset = "graph";

  TrainConfig train;
  bool trace_wallclock = false;

  Protocol protocol = Protocol::kTwoStage;
  SplitScheme test_scheme = SplitScheme::kUniformVertex;
  double test_fraction = 0.5;
  std::size_t eval_seeds = 5;
  EvalOptions eval;

  std::size_t sample_count = 10;
  std::size_t riskcheck_samples = 1000000;
  double riskcheck_z_bound = 4.0;

  SimulateSettings simulate;
};

namespace detail {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") return out = true, true;
  if (s == "false" || s == "0" || s == "no") return out = false, true;
  return false;
}

using Setter = std::function<bool(ExperimentConfig&, std::string_view)>;

template <typename T>
Setter number(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, std::string_view s) { return parse_number(s, c.*field); };
}

template <typename T, typename Get>
Setter number_at(Get get) {
  return [get](ExperimentConfig& c, std::string_view s) { return parse_number<T>(s, get(c)); };
}

template <typename Get>
Setter flag_at(Get get) {
  return [get](ExperimentConfig& c, std::string_view s) { return parse_bool(s, get(c)); };
}

template <typename Get>
Setter text_at(Get get) {
  return [get](ExperimentConfig& c, std::string_view s) {
    get(c) = std::string(s);
    return true;
  };
}

template <typename Get, typename Parse>
Setter choice_at(Get get, Parse parse) {
  return [get, parse](ExperimentConfig& c, std::string_view s) {
    auto v = parse(s);
    if (!v) return false;
    get(c) = *v;
    return true;
  };
}

inline std::optional<std::vector<double>> parse_number_list(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    auto comma = s.find(',');
    auto item = trim(s.substr(0, comma));
    double v = 0.0;
    if (!parse_number(item, v)) return std::nullopt;
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

inline const std::map<std::string, std::pair<Setter, std::string_view>>& config_schema() {
  using C = ExperimentConfig;
  static const std::map<std::string, std::pair<Setter, std::string_view>> schema = {
      {"seed", {[](C& c, std::string_view s) {
                  std::uint64_t v = 0;
                  if (!parse_number(s, v)) return false;
                  c.seed = v;
                  return true;
                },
                "unsigned integer"}},
      {"graph.path", {text_at([](C& c) -> auto& { return c.graph_path; }), "path"}},
      {"graph.format",
       {choice_at([](C& c) -> auto& { return c.graph_format; },
                  [](std::string_view s) -> std::optional<std::string> {
                    if (s == "edge_list" || s == "cache") return std::string(s);
                    return std::nullopt;
                  }),
        "edge_list | cache"}},
      {"graph.largest_component",
       {flag_at([](C& c) -> auto& { return c.load.largest_component_only; }), "bool"}},
      {"graph.deduplicate", {flag_at([](C& c) -> auto& { return c.load.deduplicate; }), "bool"}},
      {"graph.drop_self_loops",
       {flag_at([](C& c) -> auto& { return c.load.drop_self_loops; }), "bool"}},
      {"graph.name", {text_at([](C& c) -> auto& { return c.dataset; }), "text"}},
      {"labels.path", {text_at([](C& c) -> auto& { return c.labels_path; }), "path"}},
      {"labels.dim", {number(&C::label_dim), "unsigned integer"}},
      {"categories.path", {text_at([](C& c) -> auto& { return c.categories_path; }), "path"}},
      {"categories.count", {number(&C::category_count), "unsigned integer"}},
      {"output.dir", {text_at([](C& c) -> auto& { return c.output_dir; }), "path"}},
      {"sampler.algorithm",
       {choice_at([](C& c) -> auto& { return c.train.sampler.algorithm; }, parse_sampler_algorithm),
        "rw_skipgram | rw_induced | p_sampling | uniform_edge"}},
      {"sampler.walk_length",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.sampler.walk_length; }),
        "unsigned integer"}},
      {"sampler.window",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.sampler.window; }),
        "unsigned integer"}},
      {"sampler.p",
       {number_at<double>([](C& c) -> auto& { return c.train.sampler.retention; }), "real"}},
      {"sampler.edge_count",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.sampler.edge_count; }),
        "unsigned integer"}},
      {"sampler.negative",
       {choice_at([](C& c) -> auto& { return c.train.sampler.negative; }, parse_negative_mode),
        "none | induced | unigram"}},
      {"sampler.unigram_power",
       {number_at<double>([](C& c) -> auto& { return c.train.sampler.unigram_power; }), "real"}},
      {"sampler.negatives_per_vertex",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.sampler.negatives_per_vertex; }),
        "unsigned integer"}},
      {"sampler.walk_start",
       {choice_at([](C& c) -> auto& { return c.train.sampler.walk_start; }, parse_walk_start),
        "uniform_vertex | degree_proportional"}},
      {"loss.mode",
       {choice_at([](C& c) -> auto& { return c.train.loss.mode; }, parse_loss_mode),
        "edge_only | node_classification | category_embedding"}},
      {"loss.q", {number_at<double>([](C& c) -> auto& { return c.train.loss.q; }), "real"}},
      {"loss.eps", {number_at<double>([](C& c) -> auto& { return c.train.loss.eps; }), "real"}},
      {"model.dim",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.dim; }), "unsigned integer"}},
      {"train.steps",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.steps; }), "unsigned integer"}},
      {"train.lr",
       {number_at<double>([](C& c) -> auto& { return c.train.learning_rate.start; }), "real"}},
      {"train.lr_end",
       {number_at<double>([](C& c) -> auto& { return c.train.learning_rate.end; }), "real"}},
      {"train.lr_schedule",
       {choice_at([](C& c) -> auto& { return c.train.learning_rate.kind; },
                  [](std::string_view s) -> std::optional<LearningRate::Kind> {
                    if (s == "linear") return LearningRate::Kind::kLinear;
                    if (s == "constant") return LearningRate::Kind::kConstant;
                    return std::nullopt;
                  }),
        "linear | constant"}},
      {"train.global_lr_scale",
       {number_at<double>([](C& c) -> auto& { return c.train.global_lr_scale; }), "real"}},
      {"train.workers",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.workers; }), "unsigned integer"}},
      {"train.lock_free", {flag_at([](C& c) -> auto& { return c.train.lock_free; }), "bool"}},
      {"train.eval_every",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.eval_every; }),
        "unsigned integer"}},
      {"train.eval_samples",
       {number_at<std::size_t>([](C& c) -> auto& { return c.train.eval_samples; }),
        "unsigned integer"}},
      {"train.trace_wallclock", {flag_at([](C& c) -> auto& { return c.trace_wallclock; }), "bool"}},
      {"eval.protocol",
       {choice_at([](C& c) -> auto& { return c.protocol; },
                  [](std::string_view s) -> std::optional<Protocol> {
                    if (s == "two_stage") return Protocol::kTwoStage;
                    if (s == "simultaneous") return Protocol::kSimultaneous;
                    return std::nullopt;
                  }),
        "two_stage | simultaneous"}},
      {"eval.test_scheme",
       {choice_at([](C& c) -> auto& { return c.test_scheme; }, parse_split_scheme),
        "uniform | p_sampling | random_walk"}},
      {"eval.test_fraction", {number(&C::test_fraction), "real"}},
      {"eval.seeds", {number(&C::eval_seeds), "unsigned integer"}},
      {"eval.prediction",
       {choice_at([](C& c) -> auto& { return c.eval.prediction; },
                  [](std::string_view s) -> std::optional<PredictionMode> {
                    if (s == "threshold") return PredictionMode::kThreshold;
                    if (s == "top_k") return PredictionMode::kTopK;
                    return std::nullopt;
                  }),
        "threshold | top_k"}},
      {"eval.l2", {number_at<double>([](C& c) -> auto& { return c.eval.fit.l2; }), "real"}},
      {"eval.newton_iterations",
       {number_at<std::size_t>([](C& c) -> auto& { return c.eval.fit.iterations; }),
        "unsigned integer"}},
      {"sample.count", {number(&C::sample_count), "unsigned integer"}},
      {"riskcheck.samples", {number(&C::riskcheck_samples), "unsigned integer"}},
      {"riskcheck.z_bound", {number(&C::riskcheck_z_bound), "real"}},
      {"simulate.experiment",
       {choice_at([](C& c) -> auto& { return c.simulate.experiment; },
                  [](std::string_view s) -> std::optional<Experiment> {
                    for (auto e : {Experiment::kEdgeCount, Experiment::kRiskConvergence,
                                   Experiment::kStability, Experiment::kGlobalParam}) {
                      if (to_string(e) == s) return e;
                    }
                    return std::nullopt;
                  }),
        "edge_count | risk_convergence | stability | global_param"}},
      {"simulate.graphon",
       {choice_at([](C& c) -> auto& { return c.simulate.graphon; },
                  [](std::string_view s) -> std::optional<std::string> {
                    if (parse_graphon(s)) return std::string(s);
                    return std::nullopt;
                  }),
        "exponential | constant | zero"}},
      {"simulate.constant",
       {number_at<double>([](C& c) -> auto& { return c.simulate.constant; }), "real"}},
      {"simulate.sizes",
       {choice_at([](C& c) -> auto& { return c.simulate.sizes; }, parse_number_list),
        "comma-separated reals"}},
      {"simulate.replicates",
       {number_at<std::size_t>([](C& c) -> auto& { return c.simulate.replicates; }),
        "unsigned integer"}},
      {"simulate.delta", {number_at<double>([](C& c) -> auto& { return c.simulate.delta; }), "real"}},
      {"simulate.sample_size",
       {number_at<double>([](C& c) -> auto& { return c.simulate.sample_size; }), "real"}},
      {"simulate.risk_samples",
       {number_at<std::size_t>([](C& c) -> auto& { return c.simulate.risk_samples; }),
        "unsigned integer"}},
      {"simulate.steps_per_size",
       {number_at<double>([](C& c) -> auto& { return c.simulate.steps_per_size; }), "real"}},
      {"simulate.mark_dim",
       {number_at<std::size_t>([](C& c) -> auto& { return c.simulate.mark_dim; }),
        "unsigned integer"}},
      {"simulate.mark_scale",
       {number_at<double>([](C& c) -> auto& { return c.simulate.mark_scale; }), "real"}},
      {"simulate.mark_noise",
       {number_at<double>([](C& c) -> auto& { return c.simulate.mark_noise; }), "real"}},
      {"simulate.label_intercept",
       {number_at<double>([](C& c) -> auto& { return c.simulate.label_intercept; }), "real"}},
      {"simulate.label_slope",
       {number_at<double>([](C& c) -> auto& { return c.simulate.label_slope; }), "real"}},
      {"simulate.point_budget",
       {number_at<double>([](C& c) -> auto& { return c.simulate.point_budget; }), "real"}},
  };
  return schema;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [key, entry] : detail::config_schema()) out.push_back(key);
  return out;
}

/// Commands that need an input graph.
inline bool command_needs_graph(std::string_view command) { return command != "simulate"; }

/// Builds a config from raw keys. Throws ConfigError listing every violation:
/// unknown keys, unparsable values, semantic constraints, and a missing seed.
/// Referenced files are checked afterwards (PathError).
inline ExperimentConfig resolve_config(const RawConfig& raw, std::string_view command,
                                       std::vector<std::string> violations = {}) {
  ExperimentConfig c;
  const auto& schema = detail::config_schema();
  for (const auto& [key, value] : raw) {
    auto it = schema.find(key);
    if (it == schema.end()) {
      violations.push_back("unknown key '" + key + "'");
    } else if (!it->second.first(c, value)) {
      violations.push_back(key + ": invalid value '" + value + "' (expected " +
                           std::string(it->second.second) + ")");
    }
  }
  if (!c.seed) violations.push_back("seed is mandatory");
  if (command_needs_graph(command) && c.graph_path.empty()) {
    violations.push_back("graph.path is required");
  }
  auto more = c.train.violations();
  violations.insert(violations.end(), more.begin(), more.end());
  if (c.train.loss.mode == LossMode::kNodeClassification && c.labels_path.empty() &&
      command != "eval") {
    violations.push_back("loss.mode node_classification needs labels.path");
  }
  if (!c.labels_path.empty() && c.label_dim == 0) violations.push_back("labels.dim must be >= 1");
  if (command == "eval") {
    if (c.labels_path.empty()) violations.push_back("eval needs labels.path");
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
      violations.push_back("eval.test_fraction must lie in (0,1)");
    }
    if (c.eval_seeds == 0) violations.push_back("eval.seeds must be >= 1");
  }
  if (c.train.loss.mode == LossMode::kCategoryEmbedding &&
      (c.categories_path.empty() || c.category_count == 0)) {
    violations.push_back("loss.mode category_embedding needs categories.path and categories.count");
  }
  if (command == "riskcheck" && c.riskcheck_samples < 2) {
    violations.push_back("riskcheck.samples must be >= 2");
  }
  if (command == "simulate") {
    const auto& s = c.simulate;
    for (double n : s.sizes) {
      if (!(n > 0.0)) violations.push_back("simulate.sizes must be > 0");
    }
    if (s.replicates == 0) violations.push_back("simulate.replicates must be >= 1");
    if (s.mark_dim == 0) violations.push_back("simulate.mark_dim must be >= 1");
    if (!(s.delta >= 0.0)) violations.push_back("simulate.delta must be >= 0");
    if (!(s.constant >= 0.0 && s.constant <= 1.0)) {
      violations.push_back("simulate.constant must lie in [0,1]");
    }
  }
  if (c.output_dir.empty()) violations.push_back("output.dir must not be empty");
  if (!violations.empty()) throw ConfigError(std::move(violations));
  for (const std::string* path : {&c.graph_path, &c.labels_path, &c.categories_path}) {
    if (!path->empty() && !std::filesystem::is_regular_file(*path)) throw PathError(*path);
  }
  return c;
}

/// Reads `path`, applies `overrides` on top (same keys), and resolves.
inline ExperimentConfig load_config(const std::string& path, const RawConfig& overrides,
                                    std::string_view command) {
  std::vector<std::string> violations;
  RawConfig raw;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw PathError(path);
    raw = parse_config_text(in, violations);
  }
  for (const auto& [k, v] : overrides) raw[k] = v;
  return resolve_config(raw, command, std::move(violations));
}

}  // namespace relerm
