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

// relerm: experiment runner.
//
//   relerm <ingest|sample|train|eval|simulate|riskcheck> [--config FILE] [--key value ...]
//
// Any config key can be overridden as --dotted.key value (or --dotted.key=value).
// Errors are reported on stderr as a single JSON object; the exit status is 2
// for configuration errors and 1 for everything else.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relerm/config.hpp"
#include "relerm/eval.hpp"
#include "relerm/graph.hpp"
#include "relerm/graphex.hpp"
#include "relerm/model.hpp"
#include "relerm/samplers.hpp"
#include "relerm/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace relerm;

namespace {

struct Inputs {
  Graph graph;
  std::vector<std::uint64_t> ids;
  std::optional<LabelTable> labels;
  std::optional<CategoryMap> categories;

  Annotations annotations() const {
    return {labels ? &*labels : nullptr, categories ? &*categories : nullptr};
  }
};

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw PathError(path);
  return in;
}

Inputs load_inputs(const ExperimentConfig& c) {
  Inputs in;
  if (c.graph_format == "cache") {
    auto f = open_in(c.graph_path, std::ios::binary);
    in.graph = read_graph_cache(f);
  } else {
    auto f = open_in(c.graph_path);
    auto loaded = load_edge_list(f, c.load);
    in.graph = std::move(loaded.graph);
    in.ids = std::move(loaded.original_ids);
  }
  if (!c.labels_path.empty()) {
    auto f = open_in(c.labels_path);
    in.labels = load_labels(f, in.graph, c.label_dim, in.ids);
  }
  if (!c.categories_path.empty()) {
    auto f = open_in(c.categories_path);
    in.categories = load_categories(f, in.graph, c.category_count, in.ids);
  }
  return in;
}

// Output files are written to a temporary name and renamed into place, so an
// interrupted command leaves no truncated artifact behind.
class OutputFile {
 public:
  OutputFile(const fs::path& dir, const std::string& name, bool binary = false)
      : final_(dir / name), temp_(dir / (name + ".partial")) {
    out_.open(temp_, binary ? std::ios::out | std::ios::binary : std::ios::out);
    if (!out_) throw PathError(temp_.string());
  }
  std::ostream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw PathError(temp_.string());
    fs::rename(temp_, final_);
  }

 private:
  fs::path final_, temp_;
  std::ofstream out_;
};

json header(const std::string& command, const ExperimentConfig& c) {
  return json{{"command", command}, {"seed", *c.seed}};
}

fs::path prepare_output(const ExperimentConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

int run_ingest(const ExperimentConfig& c) {
  if (c.graph_format != "edge_list") {
    throw ConfigError({"ingest needs graph.format = edge_list"});
  }
  auto in = load_inputs(c);
  auto dir = prepare_output(c);
  OutputFile cache(dir, "graph.bin", true);
  write_graph_cache(cache.stream(), in.graph);
  cache.commit();
  OutputFile ids(dir, "ids.txt");
  write_id_map(ids.stream(), in.ids);
  ids.commit();
  std::cout << json{{"vertices", in.graph.vertex_count()}, {"edges", in.graph.edge_count()}}.dump()
            << '\n';
  return 0;
}

int run_sample(const ExperimentConfig& c) {
  auto in = load_inputs(c);
  const Sampler sampler(in.graph, c.train.sampler);
  auto dir = prepare_output(c);
  OutputFile out(dir, "samples.jsonl");
  auto h = header("sample", c);
  h["sampler"] = c.train.sampler.describe();
  out.stream() << h.dump() << '\n';
  auto pairs = [&](const std::vector<VertexPair>& ps) {
    json arr = json::array();
    for (auto p : ps) {
      const auto u = in.ids.empty() ? p.u : in.ids[p.u];
      const auto v = in.ids.empty() ? p.v : in.ids[p.v];
      arr.push_back({u, v});
    }
    return arr;
  };
  for (std::size_t i = 0; i < c.sample_count; ++i) {
    Rng rng(*c.seed, i);
    auto s = sampler(rng);
    json verts = json::array();
    for (Vertex v : s.vertices) verts.push_back(in.ids.empty() ? v : in.ids[v]);
    out.stream() << json{{"index", i},
                         {"vertices", verts},
                         {"base_vertex_count", s.base_vertex_count},
                         {"positive", pairs(s.positive_pairs)},
                         {"negative", pairs(s.negative_pairs)}}
                        .dump()
                 << '\n';
  }
  out.commit();
  return 0;
}

int run_train(const ExperimentConfig& c) {
  auto in = load_inputs(c);
  TrainConfig t = c.train;
  t.seed = *c.seed;
  auto result = train(in.graph, in.annotations(), t);
  auto dir = prepare_output(c);
  OutputFile ckpt(dir, "checkpoint.bin", true);
  write_checkpoint(ckpt.stream(), result.params);
  ckpt.commit();
  OutputFile emb(dir, "embeddings.tsv");
  export_embeddings(emb.stream(), result.params, in.ids);
  emb.commit();
  if (result.params.category_count() > 0) {
    OutputFile cat(dir, "category_embeddings.tsv");
    export_category_embeddings(cat.stream(), result.params);
    cat.commit();
  }
  OutputFile trace(dir, "trace.jsonl");
  trace.stream() << header("train", c).dump() << '\n';
  for (const auto& r : result.trace) {
    json j{{"step", r.step}, {"risk", r.risk_mean}, {"risk_stderr", r.risk_stderr}};
    if (c.trace_wallclock) j["wallclock"] = r.wallclock;
    trace.stream() << j.dump() << '\n';
  }
  trace.commit();
  return 0;
}

int run_eval(const ExperimentConfig& c) {
  auto in = load_inputs(c);
  TrainConfig t = c.train;
  t.seed = *c.seed;
  auto record = evaluate_protocol(in.graph, *in.labels, c.dataset, c.protocol, t.sampler, t,
                                  c.test_scheme, c.test_fraction, c.eval_seeds, c.eval);
  auto dir = prepare_output(c);
  OutputFile out(dir, "results.csv");
  out.stream() << "# seed=" << *c.seed << '\n' << std::setprecision(6);
  write_results_csv(out.stream(), std::span<const ResultRecord>(&record, 1));
  out.commit();
  std::cout << json{{"protocol", record.protocol}, {"sampler", record.sampler},
                    {"macro_f1", record.macro_f1}, {"std", record.std_dev}}
                   .dump()
            << '\n';
  return 0;
}

int run_simulate(const ExperimentConfig& c) {
  const auto& s = c.simulate;
  const Graphon w = *parse_graphon(s.graphon, s.constant);
  ExperimentCommon common{s.replicates, *c.seed, c.train.workers, s.point_budget};
  std::vector<GraphexRecord> records;
  const std::string name(to_string(s.experiment));
  switch (s.experiment) {
    case Experiment::kEdgeCount:
      for (double n : s.sizes) {
        auto summary = edge_count_experiment(w, n, common);
        detail::append_summary(records, name, "edges", summary);
        records.push_back({name, n, std::nullopt, "edges_expected", w.expected_edges(n)});
      }
      break;
    case Experiment::kRiskConvergence: {
      RiskExperimentConfig rc{common, c.train.sampler, c.train.loss, s.sample_size, s.risk_samples};
      auto kernel = MarkingKernel::decaying(s.mark_dim, s.mark_scale, s.mark_noise);
      for (const auto& summary : risk_convergence_experiment(w, kernel, s.sizes, rc)) {
        detail::append_summary(records, name, "risk", summary);
      }
      break;
    }
    case Experiment::kStability: {
      GrowthExperimentConfig gc{common, c.train, s.sample_size, s.steps_per_size};
      for (const auto& summary : stability_experiment(w, s.sizes, s.delta, gc)) {
        detail::append_summary(records, name, "drift", summary);
      }
      break;
    }
    case Experiment::kGlobalParam: {
      GrowthExperimentConfig gc{common, c.train, s.sample_size, s.steps_per_size};
      LabelKernel labels{s.label_intercept, s.label_slope};
      for (const auto& r : global_param_experiment(w, labels, s.sizes, gc, c.eval.fit)) {
        for (std::size_t rep = 0; rep < r.estimates.size(); ++rep) {
          const auto& est = r.estimates[rep];
          for (std::size_t i = 0; i < est.size(); ++i) {
            const bool bias = i + 1 == est.size();
            records.push_back({name, r.n, rep, bias ? "bias" : "weight_" + std::to_string(i),
                               est[i]});
          }
        }
        detail::append_summary(records, name, "distance_to_largest", r.distance);
      }
      break;
    }
  }
  auto dir = prepare_output(c);
  OutputFile out(dir, "records.jsonl");
  auto h = header("simulate", c);
  h["experiment"] = name;
  h["graphon"] = w.name;
  out.stream() << h.dump() << '\n';
  write_records(out.stream(), records);
  out.commit();
  return 0;
}

int run_riskcheck(const ExperimentConfig& c) {
  auto in = load_inputs(c);
  const auto ann = in.annotations();
  const std::size_t L = in.labels ? in.labels->label_dim() : 0;
  const std::size_t C = in.categories ? in.categories->category_count() : 0;
  auto params = ParamStore::initialized(in.graph.vertex_count(), c.train.dim, L, C, *c.seed);
  const auto& sc = c.train.sampler;
  const auto& lc = c.train.loss;
  const double exact = exact_risk(in.graph, ann, params, sc, lc);
  Rng risk_rng(*c.seed, 1);
  auto est = estimate_risk(in.graph, ann, params, sc, lc, c.riskcheck_samples, risk_rng);
  const double risk_z = est.std_error > 0.0 ? (est.mean - exact) / est.std_error
                                            : (est.mean == exact ? 0.0 : INFINITY);
  Rng grad_rng(*c.seed, 2);
  auto report = check_unbiasedness(in.graph, ann, params, sc, lc, c.riskcheck_samples, grad_rng);
  const bool pass = std::abs(risk_z) < c.riskcheck_z_bound && report.passes(c.riskcheck_z_bound);

  auto dir = prepare_output(c);
  OutputFile out(dir, "riskcheck.jsonl");
  auto h = header("riskcheck", c);
  h["sampler"] = sc.describe();
  h["loss"] = std::string(to_string(lc.mode));
  out.stream() << h.dump() << '\n';
  out.stream() << json{{"check", "risk"}, {"exact", exact}, {"estimate", est.mean},
                       {"std_error", est.std_error}, {"z", risk_z}}
                      .dump()
               << '\n';
  out.stream() << json{{"check", "gradient"}, {"n_samples", report.n_samples},
                       {"coordinates", report.z.size()}, {"max_abs_z", report.max_abs_z},
                       {"z", report.z}}
                      .dump()
               << '\n';
  out.stream() << json{{"check", "summary"}, {"z_bound", c.riskcheck_z_bound}, {"pass", pass}}.dump()
               << '\n';
  out.commit();
  std::cout << json{{"risk_z", risk_z}, {"max_abs_gradient_z", report.max_abs_z}, {"pass", pass}}
                   .dump()
            << '\n';
  if (!pass) {
    throw Error("check_failed", "estimator disagrees with the exact oracle beyond |z| < " +
                                    std::to_string(c.riskcheck_z_bound));
  }
  return 0;
}

int report_error(const std::string& kind, const std::string& message,
                 const std::vector<std::string>& violations = {}) {
  json j{{"error", kind}, {"message", message}};
  if (!violations.empty()) j["violations"] = violations;
  std::cerr << j.dump() << '\n';
  return kind == "config_error" ? 2 : 1;
}

// Splits leftover "--key value" / "--key=value" arguments into overrides.
RawConfig parse_overrides(const std::vector<std::string>& extras) {
  RawConfig out;
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      bad.push_back("unexpected argument '" + arg + "'");
      continue;
    }
    const std::string body = arg.substr(2);
    if (auto eq = body.find('='); eq != std::string::npos) {
      out[body.substr(0, eq)] = body.substr(eq + 1);
    } else if (i + 1 < extras.size()) {
      out[body] = extras[++i];
    } else {
      bad.push_back("override '" + arg + "' has no value");
    }
  }
  if (!bad.empty()) throw ConfigError(bad);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relerm: relational ERM experiment runner"};
  app.require_subcommand(1);
  std::string config_path;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "parse an edge list into a binary cache"},
      {"sample", "dump sampler draws"},
      {"train", "fit embeddings; write checkpoint, embeddings and trace"},
      {"eval", "node classification evaluation; write a results table"},
      {"simulate", "graphex-process experiments; write metric records"},
      {"riskcheck", "compare estimators against the exact risk oracle"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "config file (dotted keys)");
    sub->allow_extras();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage_error", e.what());
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    auto config = load_config(config_path, parse_overrides(sub->remaining()), command);
    if (command == "ingest") return run_ingest(config);
    if (command == "sample") return run_sample(config);
    if (command == "train") return run_train(config);
    if (command == "eval") return run_eval(config);
    if (command == "simulate") return run_simulate(config);
    return run_riskcheck(config);
  } catch (const ConfigError& e) {
    return report_error(e.kind(), e.what(), e.violations());
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal_error", e.what());
  }
}
