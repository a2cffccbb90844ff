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

#include "gpn/gpn.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>

#include "gpn/dataset.hpp"
#include "gpn/episodic.hpp"
#include "gpn/error.hpp"
#include "gpn/gradcheck.hpp"
#include "gpn/log.hpp"
#include "gpn/params_io.hpp"

struct gpn_graph {
  gpn::AttributedGraph graph;
};

struct gpn_model {
  gpn::ModelParams<double> params;
  gpn::PrototypeStrategy strategy = gpn::PrototypeStrategy::kWeighted;
  gpn_train_summary summary{};
};

struct gpn_report {
  gpn::MetricReport report;
};

namespace {

thread_local std::string tl_last_error;

gpn_status fail(gpn_status status, const char* what) {
  tl_last_error = what;
  return status;
}

// Runs `fn` and maps any exception onto a status code.
template <typename Fn>
gpn_status guarded(Fn&& fn) {
  try {
    fn();
    tl_last_error.clear();
    return GPN_OK;
  } catch (const std::invalid_argument& e) {
    return fail(GPN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(GPN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const gpn::FormatError& e) {
    return fail(GPN_ERR_FORMAT, e.what());
  } catch (const gpn::IoError& e) {
    return fail(GPN_ERR_IO, e.what());
  } catch (const gpn::NumericError& e) {
    return fail(GPN_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GPN_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(GPN_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(GPN_ERR_RUNTIME, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gpn::PrototypeStrategy to_strategy(gpn_strategy s) {
  switch (s) {
    case GPN_STRATEGY_WEIGHTED:
      return gpn::PrototypeStrategy::kWeighted;
    case GPN_STRATEGY_MEAN:
      return gpn::PrototypeStrategy::kMean;
  }
  throw std::invalid_argument("unknown prototype strategy");
}

gpn::Precision to_precision(gpn_precision p) {
  switch (p) {
    case GPN_PRECISION_F64:
      return gpn::Precision::kF64;
    case GPN_PRECISION_F32:
      return gpn::Precision::kF32;
  }
  throw std::invalid_argument("unknown precision");
}

gpn::SbmSpec to_spec(const gpn_sbm_spec& s) {
  gpn::SbmSpec spec;
  spec.num_classes = s.num_classes;
  spec.nodes_per_class = s.nodes_per_class;
  spec.p_in = s.p_in;
  spec.p_out = s.p_out;
  spec.feature_dim = s.feature_dim;
  spec.class_mean_scale = s.class_mean_scale;
  spec.noise_std = s.noise_std;
  spec.train_classes = s.train_classes;
  spec.val_classes = s.val_classes;
  spec.test_classes = s.test_classes;
  spec.seed = s.seed;
  return spec;
}

gpn::MetaTestConfig to_meta_test(const gpn_eval_config& c) {
  gpn::MetaTestConfig m;
  m.n_way = c.n_way;
  m.k_shot = c.k_shot;
  m.m_query = c.m_query;
  m.num_tasks = c.num_tasks;
  m.repeats = c.repeats;
  m.seed = c.seed;
  m.strategy = to_strategy(c.strategy);
  m.precision = to_precision(c.precision);
  m.centrality_eps = c.centrality_eps;
  m.threads = c.threads;
  m.mislabeled_per_class = c.mislabeled_per_class;
  return m;
}

}  // namespace

extern "C" {

const char* gpn_last_error(void) { return tl_last_error.c_str(); }

const char* gpn_status_name(gpn_status status) {
  switch (status) {
    case GPN_OK:
      return "ok";
    case GPN_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case GPN_ERR_FORMAT:
      return "format error";
    case GPN_ERR_IO:
      return "i/o error";
    case GPN_ERR_NUMERIC:
      return "numeric error";
    case GPN_ERR_RUNTIME:
      return "runtime error";
  }
  return "unknown status";
}

void gpn_set_verbosity(int level) {
  gpn::set_log_level(level <= 0   ? gpn::LogLevel::kSilent
                     : level == 1 ? gpn::LogLevel::kWarning
                                  : gpn::LogLevel::kInfo);
}

void gpn_string_free(char* s) { std::free(s); }

void gpn_sbm_spec_default(gpn_sbm_spec* spec) {
  if (spec == nullptr) return;
  const gpn::SbmSpec d;
  *spec = gpn_sbm_spec{static_cast<uint32_t>(d.num_classes),
                       static_cast<uint32_t>(d.nodes_per_class),
                       d.p_in,
                       d.p_out,
                       static_cast<uint32_t>(d.feature_dim),
                       d.class_mean_scale,
                       d.noise_std,
                       static_cast<uint32_t>(d.train_classes),
                       static_cast<uint32_t>(d.val_classes),
                       static_cast<uint32_t>(d.test_classes),
                       d.seed};
}

gpn_status gpn_generate_synth(const gpn_sbm_spec* spec, const char* out_dir) {
  return guarded([&] {
    require(spec != nullptr && out_dir != nullptr, "gpn_generate_synth: null argument");
    gpn::write_bundle(gpn::generate_sbm(to_spec(*spec)), out_dir);
  });
}

gpn_status gpn_graph_generate(const gpn_sbm_spec* spec, gpn_graph** out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "gpn_graph_generate: null argument");
    gpn::DatasetBundle b = gpn::generate_sbm(to_spec(*spec));
    *out = new gpn_graph{gpn::build_graph(b.edges, std::move(b.features), std::move(b.labels),
                                          std::move(b.splits))};
  });
}

gpn_status gpn_graph_load(const char* dir, int directed, gpn_graph** out) {
  return guarded([&] {
    require(dir != nullptr && out != nullptr, "gpn_graph_load: null argument");
    gpn::GraphOptions options;
    options.directed = directed != 0;
    *out = new gpn_graph{gpn::load_dataset(dir, options)};
  });
}

void gpn_graph_free(gpn_graph* graph) { delete graph; }

gpn_status gpn_graph_get_stats(const gpn_graph* graph, gpn_graph_stats* out) {
  return guarded([&] {
    require(graph != nullptr && out != nullptr, "gpn_graph_get_stats: null argument");
    const auto& g = graph->graph;
    const gpn::DatasetStats s = gpn::dataset_stats(g);
    *out = gpn_graph_stats{s.nodes,
                           s.edges,
                           s.attributes,
                           s.labels,
                           g.dropped_self_loops(),
                           g.splits().train.size(),
                           g.splits().val.size(),
                           g.splits().test.size()};
  });
}

void gpn_train_config_default(gpn_train_config* config) {
  if (config == nullptr) return;
  const gpn::TrainConfig d;
  *config = gpn_train_config{static_cast<uint32_t>(d.n_way),
                             static_cast<uint32_t>(d.k_shot),
                             static_cast<uint32_t>(d.m_query),
                             static_cast<uint32_t>(d.episodes),
                             d.adam.lr,
                             d.adam.weight_decay,
                             d.adam.beta1,
                             d.adam.beta2,
                             d.adam.eps,
                             d.dropout,
                             d.centrality_eps,
                             static_cast<uint32_t>(d.eval_every),
                             static_cast<uint32_t>(d.patience),
                             static_cast<uint32_t>(d.val_tasks),
                             d.seed,
                             GPN_STRATEGY_WEIGHTED,
                             GPN_PRECISION_F64};
}

gpn_status gpn_train(const gpn_graph* graph, const gpn_train_config* config,
                     gpn_history_fn on_record, void* user, gpn_model** out) {
  return guarded([&] {
    require(graph != nullptr && config != nullptr && out != nullptr, "gpn_train: null argument");
    gpn::TrainConfig tc;
    tc.n_way = config->n_way;
    tc.k_shot = config->k_shot;
    tc.m_query = config->m_query;
    tc.episodes = config->episodes;
    tc.adam.lr = config->lr;
    tc.adam.weight_decay = config->weight_decay;
    tc.adam.beta1 = config->beta1;
    tc.adam.beta2 = config->beta2;
    tc.adam.eps = config->adam_eps;
    tc.dropout = config->dropout;
    tc.centrality_eps = config->centrality_eps;
    tc.eval_every = config->eval_every;
    tc.patience = config->patience;
    tc.val_tasks = config->val_tasks;
    tc.seed = config->seed;
    tc.strategy = to_strategy(config->strategy);
    tc.precision = to_precision(config->precision);

    std::function<void(const gpn::HistoryRecord&)> cb;
    if (on_record != nullptr) {
      cb = [&](const gpn::HistoryRecord& r) {
        on_record(static_cast<uint32_t>(r.episode), r.loss, r.val_accuracy ? 1 : 0,
                  r.val_accuracy.value_or(0.0), user);
      };
    }
    gpn::TrainResult result = gpn::train(graph->graph, tc, cb);
    auto* model = new gpn_model{std::move(result.params), tc.strategy, {}};
    model->summary.episodes_run = static_cast<uint32_t>(result.history.size());
    model->summary.best_episode = static_cast<uint32_t>(result.best_episode);
    model->summary.has_best_val = result.best_val_accuracy ? 1 : 0;
    model->summary.best_val_accuracy = result.best_val_accuracy.value_or(0.0);
    model->summary.stopped_early = result.stopped_early ? 1 : 0;
    *out = model;
  });
}

gpn_status gpn_model_get_summary(const gpn_model* model, gpn_train_summary* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "gpn_model_get_summary: null argument");
    *out = model->summary;
  });
}

gpn_strategy gpn_model_strategy(const gpn_model* model) {
  if (model == nullptr || model->strategy == gpn::PrototypeStrategy::kWeighted) {
    return GPN_STRATEGY_WEIGHTED;
  }
  return GPN_STRATEGY_MEAN;
}

gpn_status gpn_model_save(const gpn_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "gpn_model_save: null argument");
    gpn::save_params(path, model->params, model->strategy);
  });
}

gpn_status gpn_model_load(const char* path, gpn_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "gpn_model_load: null argument");
    gpn::SavedModel saved = gpn::load_params(path);
    *out = new gpn_model{std::move(saved.params), saved.strategy, {}};
  });
}

void gpn_model_free(gpn_model* model) { delete model; }

void gpn_eval_config_default(gpn_eval_config* config) {
  if (config == nullptr) return;
  const gpn::MetaTestConfig d;
  *config = gpn_eval_config{static_cast<uint32_t>(d.n_way),
                            static_cast<uint32_t>(d.k_shot),
                            static_cast<uint32_t>(d.m_query),
                            static_cast<uint32_t>(d.num_tasks),
                            static_cast<uint32_t>(d.repeats),
                            d.seed,
                            GPN_STRATEGY_WEIGHTED,
                            GPN_PRECISION_F64,
                            d.centrality_eps,
                            static_cast<uint32_t>(d.threads),
                            static_cast<uint32_t>(d.mislabeled_per_class)};
}

gpn_status gpn_evaluate(const gpn_graph* graph, const gpn_model* model,
                        const gpn_eval_config* config, gpn_report** out) {
  return guarded([&] {
    require(graph != nullptr && model != nullptr && config != nullptr && out != nullptr,
            "gpn_evaluate: null argument");
    *out = new gpn_report{gpn::meta_test(graph->graph, model->params, to_meta_test(*config))};
  });
}

void gpn_report_free(gpn_report* report) { delete report; }

size_t gpn_report_num_repeats(const gpn_report* report) {
  return report == nullptr ? 0 : report->report.per_repeat.size();
}

gpn_status gpn_report_get_repeat(const gpn_report* report, size_t index, gpn_metrics* out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "gpn_report_get_repeat: null argument");
    const auto& r = report->report.per_repeat.at(index);
    *out = gpn_metrics{r.accuracy, r.micro_f1, r.macro_f1};
  });
}

gpn_status gpn_report_get_summary(const gpn_report* report, gpn_metrics* mean,
                                  gpn_metrics* stddev) {
  return guarded([&] {
    require(report != nullptr, "gpn_report_get_summary: null report");
    const auto& r = report->report;
    if (mean != nullptr) *mean = gpn_metrics{r.accuracy.mean, r.micro_f1.mean, r.macro_f1.mean};
    if (stddev != nullptr) *stddev = gpn_metrics{r.accuracy.std, r.micro_f1.std, r.macro_f1.std};
  });
}

gpn_status gpn_report_to_json(const gpn_report* report, char** out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "gpn_report_to_json: null argument");
    *out = copy_string(report->report.to_json());
  });
}

gpn_status gpn_report_to_csv(const gpn_report* report, char** out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "gpn_report_to_csv: null argument");
    *out = copy_string(report->report.to_csv());
  });
}

gpn_status gpn_export_similarity(const gpn_graph* graph, const gpn_model* model,
                                 const gpn_eval_config* config, char** csv_out) {
  return guarded([&] {
    require(graph != nullptr && model != nullptr && config != nullptr && csv_out != nullptr,
            "gpn_export_similarity: null argument");
    const gpn::SimilarityExport e =
        gpn::export_similarity(graph->graph, model->params, to_meta_test(*config));
    *csv_out = copy_string(gpn::similarity_csv(e.matrix, e.support_names, e.query_names));
  });
}

void gpn_gradcheck_config_default(gpn_gradcheck_config* config) {
  if (config == nullptr) return;
  const gpn::GradcheckConfig d;
  *config = gpn_gradcheck_config{static_cast<uint32_t>(d.seeds),
                                 static_cast<uint32_t>(d.nodes),
                                 static_cast<uint32_t>(d.edges),
                                 static_cast<uint32_t>(d.feature_dim),
                                 d.h,
                                 d.tolerance,
                                 d.dropout,
                                 GPN_STRATEGY_WEIGHTED,
                                 d.seed};
}

gpn_status gpn_gradcheck(const gpn_gradcheck_config* config, gpn_gradcheck_result* out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "gpn_gradcheck: null argument");
    gpn::GradcheckConfig gc;
    gc.seeds = config->seeds;
    gc.nodes = config->nodes;
    gc.edges = config->edges;
    gc.feature_dim = config->feature_dim;
    gc.h = config->h;
    gc.tolerance = config->tolerance;
    gc.dropout = config->dropout;
    gc.strategy = to_strategy(config->strategy);
    gc.seed = config->seed;
    require(gc.h > 0.0 && gc.tolerance > 0.0, "gpn_gradcheck: h and tolerance must be positive");
    const gpn::GradcheckResult r = gpn::run_gradcheck(gc);
    *out = gpn_gradcheck_result{r.max_rel_error, r.checked, r.skipped,
                                static_cast<uint32_t>(r.seeds), r.seconds, r.passed ? 1 : 0};
  });
}

}  // extern "C"
