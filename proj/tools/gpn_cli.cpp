// Copyright 2026 The GPN Authors.
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

// Command-line front end. Talks to the library only through gpn.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "gpn/gpn.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CliFailure {
  std::string message;
};

void check(gpn_status status, const std::string& context) {
  if (status != GPN_OK) {
    throw CliFailure{context + ": " + gpn_status_name(status) + ": " + gpn_last_error()};
  }
}

struct GraphDeleter {
  void operator()(gpn_graph* g) const { gpn_graph_free(g); }
};
struct ModelDeleter {
  void operator()(gpn_model* m) const { gpn_model_free(m); }
};
struct ReportDeleter {
  void operator()(gpn_report* r) const { gpn_report_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { gpn_string_free(s); }
};
using GraphPtr = std::unique_ptr<gpn_graph, GraphDeleter>;
using ModelPtr = std::unique_ptr<gpn_model, ModelDeleter>;
using ReportPtr = std::unique_ptr<gpn_report, ReportDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

GraphPtr load_graph(const std::string& dir, bool directed) {
  gpn_graph* g = nullptr;
  check(gpn_graph_load(dir.c_str(), directed ? 1 : 0, &g), "loading " + dir);
  return GraphPtr(g);
}

ModelPtr load_model(const std::string& path) {
  gpn_model* m = nullptr;
  check(gpn_model_load(path.c_str(), &m), "loading " + path);
  return ModelPtr(m);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw CliFailure{"cannot write " + path};
}

gpn_strategy parse_strategy(const std::string& s) {
  return s == "gpn-naive" ? GPN_STRATEGY_MEAN : GPN_STRATEGY_WEIGHTED;
}

gpn_precision parse_precision(const std::string& s) {
  return s == "f32" ? GPN_PRECISION_F32 : GPN_PRECISION_F64;
}

// GPN_THREADS caps evaluation parallelism; unset means all hardware threads.
uint32_t eval_threads() {
  uint32_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GPN_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw CliFailure{"GPN_THREADS must be a positive integer"};
    threads = std::min<uint32_t>(threads, static_cast<uint32_t>(cap));
  }
  return threads;
}

struct TaskShape {
  uint32_t n = 5;
  uint32_t k = 5;
  std::optional<uint32_t> m;
  uint64_t seed = 0;
  std::string strategy;
  std::string precision = "f64";
};

void add_task_flags(CLI::App* cmd, TaskShape& t, uint32_t default_k) {
  t.k = default_k;
  cmd->add_option("--n", t.n, "Classes per task (N)")->check(CLI::Range(2u, 1000000u));
  cmd->add_option("--k", t.k, "Support nodes per class (K)")->check(CLI::Range(1u, 1000000u));
  cmd->add_option("--m", t.m, "Query nodes per class (M, default K)")
      ->check(CLI::Range(1u, 1000000u));
  cmd->add_option("--seed", t.seed, "Random seed");
  cmd->add_option("--strategy", t.strategy, "Prototype strategy")
      ->check(CLI::IsMember({"gpn", "gpn-naive"}));
  cmd->add_option("--precision", t.precision, "Floating-point precision")
      ->check(CLI::IsMember({"f32", "f64"}));
}

gpn_eval_config eval_config(const TaskShape& t, gpn_strategy fallback) {
  gpn_eval_config c;
  gpn_eval_config_default(&c);
  c.n_way = t.n;
  c.k_shot = t.k;
  c.m_query = t.m.value_or(t.k);
  c.seed = t.seed;
  c.strategy = t.strategy.empty() ? fallback : parse_strategy(t.strategy);
  c.precision = parse_precision(t.precision);
  c.threads = eval_threads();
  return c;
}

void on_history(uint32_t episode, double loss, int has_val, double val_accuracy, void* user) {
  auto* out = static_cast<std::ostream*>(user);
  char buf[160];
  if (has_val) {
    std::snprintf(buf, sizeof(buf), "{\"episode\":%u,\"loss\":%.17g,\"val_accuracy\":%.17g}\n",
                  episode, loss, val_accuracy);
  } else {
    std::snprintf(buf, sizeof(buf), "{\"episode\":%u,\"loss\":%.17g}\n", episode, loss);
  }
  *out << buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph prototypical networks for few-shot node classification"};
  app.require_subcommand(1);
  int verbosity = 1;
  app.add_flag_callback("-q,--quiet", [&] { verbosity = 0; }, "Suppress warnings");
  app.add_flag_callback("-v,--verbose", [&] { verbosity = 2; }, "Print progress information");

  // generate-synth
  auto* gen = app.add_subcommand("generate-synth", "Write a stochastic block model dataset");
  gpn_sbm_spec spec;
  gpn_sbm_spec_default(&spec);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", spec.num_classes, "Number of classes")
      ->check(CLI::Range(1u, 1000000u));
  gen->add_option("--per-class", spec.nodes_per_class, "Nodes per class")
      ->check(CLI::Range(1u, 100000000u));
  gen->add_option("--p-in", spec.p_in, "Within-class edge probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-out", spec.p_out, "Cross-class edge probability")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--dim", spec.feature_dim, "Feature dimension")->check(CLI::Range(1u, 1000000u));
  gen->add_option("--scale", spec.class_mean_scale, "Class centroid norm");
  gen->add_option("--noise", spec.noise_std, "Feature noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  std::optional<uint32_t> gen_train;
  std::optional<uint32_t> gen_val;
  std::optional<uint32_t> gen_test;
  gen->add_option("--train-classes", gen_train, "Classes in the train split");
  gen->add_option("--val-classes", gen_val, "Classes in the validation split");
  gen->add_option("--test-classes", gen_test, "Classes in the test split");
  gen->add_option("--seed", spec.seed, "Random seed");

  // stats
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  std::string stats_data;
  bool stats_directed = false;
  stats->add_option("--data", stats_data, "Dataset directory")->required();
  stats->add_flag("--directed", stats_directed, "Use in-degree for centrality");

  // train
  auto* train = app.add_subcommand("train", "Meta-train on the train split");
  gpn_train_config tc;
  gpn_train_config_default(&tc);
  std::string train_data;
  std::string train_out;
  std::string history_path;
  std::string train_strategy = "gpn";
  std::string train_precision = "f64";
  std::optional<uint32_t> train_m;
  bool train_directed = false;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out,--params", train_out, "Parameter file to write")->required();
  train->add_option("--history", history_path, "History file (default <out>.history.jsonl)");
  train->add_option("--n", tc.n_way, "Classes per task (N)")->check(CLI::Range(2u, 1000000u));
  train->add_option("--k", tc.k_shot, "Support nodes per class (K)")
      ->check(CLI::Range(1u, 1000000u));
  train->add_option("--m", train_m, "Query nodes per class (M, default K)")
      ->check(CLI::Range(1u, 1000000u));
  train->add_option("--episodes", tc.episodes, "Training episodes");
  train->add_option("--seed", tc.seed, "Random seed");
  train->add_option("--strategy", train_strategy, "Prototype strategy")
      ->check(CLI::IsMember({"gpn", "gpn-naive"}));
  train->add_option("--dropout", tc.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.999999));
  train->add_option("--precision", train_precision, "Floating-point precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  train->add_option("--lr", tc.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train->add_option("--weight-decay", tc.weight_decay, "L2 weight decay")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--eval-every", tc.eval_every, "Episodes between validations (0 disables)");
  train->add_option("--patience", tc.patience, "Validations without improvement before stopping");
  train->add_option("--val-tasks", tc.val_tasks, "Validation tasks per evaluation");
  train->add_flag("--directed", train_directed, "Use in-degree for centrality");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Meta-test a trained model");
  TaskShape eval_shape;
  std::string eval_data;
  std::string eval_params;
  std::string eval_csv;
  uint32_t eval_tasks = 50;
  uint32_t eval_repeats = 10;
  uint32_t eval_mislabeled = 0;
  bool eval_directed = false;
  evaluate->add_option("--data", eval_data, "Dataset directory")->required();
  evaluate->add_option("--params", eval_params, "Parameter file")->required();
  add_task_flags(evaluate, eval_shape, 5);
  evaluate->add_option("--tasks", eval_tasks, "Tasks per repeat")->check(CLI::Range(1u, 100000000u));
  evaluate->add_option("--repeats", eval_repeats, "Repeats")->check(CLI::Range(1u, 1000000u));
  evaluate->add_option("--csv", eval_csv, "Also write per-repeat metrics as CSV");
  evaluate->add_option("--mislabeled", eval_mislabeled,
                       "Support nodes per class replaced by another class's node");
  evaluate->add_flag("--directed", eval_directed, "Use in-degree for centrality");

  // export-similarity
  auto* sim = app.add_subcommand("export-similarity", "Write one test task's similarity matrix");
  TaskShape sim_shape;
  std::string sim_data;
  std::string sim_params;
  std::string sim_out;
  sim->add_option("--data", sim_data, "Dataset directory")->required();
  sim->add_option("--params", sim_params, "Parameter file")->required();
  sim->add_option("--out", sim_out, "CSV file (default stdout)");
  add_task_flags(sim, sim_shape, 5);

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  gpn_gradcheck_config gc;
  gpn_gradcheck_config_default(&gc);
  std::string grad_strategy = "gpn";
  grad->add_option("--seeds", gc.seeds, "Random graphs to check")->check(CLI::Range(1u, 100000u));
  grad->add_option("--nodes", gc.nodes, "Nodes per graph")->check(CLI::Range(6u, 100000u));
  grad->add_option("--edges", gc.edges, "Edges per graph");
  grad->add_option("--dim", gc.feature_dim, "Feature dimension")->check(CLI::Range(1u, 100000u));
  grad->add_option("--step", gc.h, "Central-difference step")->check(CLI::PositiveNumber);
  grad->add_option("--tolerance", gc.tolerance, "Max relative error")->check(CLI::PositiveNumber);
  grad->add_option("--dropout", gc.dropout, "Dropout rate (fixed mask)")
      ->check(CLI::Range(0.0, 0.999999));
  grad->add_option("--seed", gc.seed, "Random seed");
  grad->add_option("--strategy", grad_strategy, "Prototype strategy")
      ->check(CLI::IsMember({"gpn", "gpn-naive"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    std::cerr << app.help();
    return kExitUsage;
  }
  gpn_set_verbosity(verbosity);

  try {
    if (gen->parsed()) {
      const gpn_sbm_spec defaults = [] {
        gpn_sbm_spec d;
        gpn_sbm_spec_default(&d);
        return d;
      }();
      if (spec.num_classes != defaults.num_classes && !gen_train && !gen_val && !gen_test) {
        // Keep the default 5/2/3 proportions for other class counts.
        spec.val_classes = spec.num_classes / 5;
        spec.test_classes = (spec.num_classes * 3) / 10;
        spec.train_classes = spec.num_classes - spec.val_classes - spec.test_classes;
      }
      if (gen_train) spec.train_classes = *gen_train;
      if (gen_val) spec.val_classes = *gen_val;
      if (gen_test) spec.test_classes = *gen_test;
      check(gpn_generate_synth(&spec, gen_out.c_str()), "generate-synth");
      std::cout << "wrote " << gen_out << "\n";
    } else if (stats->parsed()) {
      GraphPtr g = load_graph(stats_data, stats_directed);
      gpn_graph_stats s;
      check(gpn_graph_get_stats(g.get(), &s), "stats");
      std::cout << "{\"nodes\":" << s.nodes << ",\"edges\":" << s.edges
                << ",\"attributes\":" << s.attributes << ",\"labels\":" << s.labels
                << ",\"dropped_self_loops\":" << s.dropped_self_loops
                << ",\"splits\":[" << s.train_classes << "," << s.val_classes << ","
                << s.test_classes << "]}\n";
    } else if (train->parsed()) {
      tc.m_query = train_m.value_or(tc.k_shot);
      tc.strategy = parse_strategy(train_strategy);
      tc.precision = parse_precision(train_precision);
      GraphPtr g = load_graph(train_data, train_directed);
      if (history_path.empty()) history_path = train_out + ".history.jsonl";
      std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
      if (!history) throw CliFailure{"cannot write " + history_path};
      gpn_model* raw = nullptr;
      check(gpn_train(g.get(), &tc, on_history, &history, &raw), "train");
      ModelPtr model(raw);
      history.flush();
      if (!history) throw CliFailure{"write failed for " + history_path};
      check(gpn_model_save(model.get(), train_out.c_str()), "saving " + train_out);
      gpn_train_summary summary;
      check(gpn_model_get_summary(model.get(), &summary), "train");
      std::cout << "episodes " << summary.episodes_run << ", best episode "
                << summary.best_episode;
      if (summary.has_best_val) std::cout << " (val accuracy " << summary.best_val_accuracy << ")";
      if (summary.stopped_early) std::cout << ", stopped early";
      std::cout << "\nparams " << train_out << "\nhistory " << history_path << "\n";
    } else if (evaluate->parsed()) {
      GraphPtr g = load_graph(eval_data, eval_directed);
      ModelPtr model = load_model(eval_params);
      gpn_eval_config c = eval_config(eval_shape, gpn_model_strategy(model.get()));
      c.num_tasks = eval_tasks;
      c.repeats = eval_repeats;
      c.mislabeled_per_class = eval_mislabeled;
      gpn_report* raw = nullptr;
      check(gpn_evaluate(g.get(), model.get(), &c, &raw), "evaluate");
      ReportPtr report(raw);
      char* json = nullptr;
      check(gpn_report_to_json(report.get(), &json), "evaluate");
      StringPtr json_owner(json);
      std::cout << json << "\n";
      if (!eval_csv.empty()) {
        char* csv = nullptr;
        check(gpn_report_to_csv(report.get(), &csv), "evaluate");
        StringPtr csv_owner(csv);
        write_text(eval_csv, csv);
      }
    } else if (sim->parsed()) {
      GraphPtr g = load_graph(sim_data, false);
      ModelPtr model = load_model(sim_params);
      gpn_eval_config c = eval_config(sim_shape, gpn_model_strategy(model.get()));
      char* csv = nullptr;
      check(gpn_export_similarity(g.get(), model.get(), &c, &csv), "export-similarity");
      StringPtr owner(csv);
      if (sim_out.empty()) {
        std::cout << csv;
      } else {
        write_text(sim_out, csv);
      }
    } else if (grad->parsed()) {
      gc.strategy = parse_strategy(grad_strategy);
      gpn_gradcheck_result r;
      check(gpn_gradcheck(&gc, &r), "gradcheck");
      std::printf("max relative error %.3e over %llu entries (%llu skipped at kinks), %u seeds, "
                  "%.2f s: %s\n",
                  r.max_rel_error, static_cast<unsigned long long>(r.checked),
                  static_cast<unsigned long long>(r.skipped), r.seeds, r.seconds,
                  r.passed ? "ok" : "FAILED");
      return r.passed ? 0 : kExitRuntime;
    }
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
