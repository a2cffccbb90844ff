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

#ifndef GPN_GPN_H_
#define GPN_GPN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GPN_API __declspec(dllexport)
#else
#define GPN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpn_status {
  GPN_OK = 0,
  GPN_ERR_INVALID_ARGUMENT = 1,
  GPN_ERR_FORMAT = 2,
  GPN_ERR_IO = 3,
  GPN_ERR_NUMERIC = 4,
  GPN_ERR_RUNTIME = 5
} gpn_status;

typedef enum gpn_strategy { GPN_STRATEGY_WEIGHTED = 0, GPN_STRATEGY_MEAN = 1 } gpn_strategy;

typedef enum gpn_precision { GPN_PRECISION_F64 = 0, GPN_PRECISION_F32 = 1 } gpn_precision;

typedef struct gpn_graph gpn_graph;
typedef struct gpn_model gpn_model;
typedef struct gpn_report gpn_report;

/* Message of the last failed call on this thread; never NULL. */
GPN_API const char* gpn_last_error(void);
GPN_API const char* gpn_status_name(gpn_status status);

/* 0 silent, 1 warnings (default), 2 info. */
GPN_API void gpn_set_verbosity(int level);

/* Releases strings returned by this library. */
GPN_API void gpn_string_free(char* s);

/* ---- Graphs ---- */

typedef struct gpn_sbm_spec {
  uint32_t num_classes;
  uint32_t nodes_per_class;
  double p_in;
  double p_out;
  uint32_t feature_dim;
  double class_mean_scale;
  double noise_std;
  uint32_t train_classes;
  uint32_t val_classes;
  uint32_t test_classes;
  uint64_t seed;
} gpn_sbm_spec;

GPN_API void gpn_sbm_spec_default(gpn_sbm_spec* spec);

/* Writes a dataset directory (edges.tsv, features.tsv, labels.txt, splits.json). */
GPN_API gpn_status gpn_generate_synth(const gpn_sbm_spec* spec, const char* out_dir);

/* In-memory variant of gpn_generate_synth + gpn_graph_load. */
GPN_API gpn_status gpn_graph_generate(const gpn_sbm_spec* spec, gpn_graph** out);

/* `directed` != 0 makes centrality use in-degree of the listed edges. */
GPN_API gpn_status gpn_graph_load(const char* dir, int directed, gpn_graph** out);
GPN_API void gpn_graph_free(gpn_graph* graph);

typedef struct gpn_graph_stats {
  uint64_t nodes;
  uint64_t edges;
  uint64_t attributes;
  uint64_t labels;
  uint64_t dropped_self_loops;
  uint64_t train_classes;
  uint64_t val_classes;
  uint64_t test_classes;
} gpn_graph_stats;

GPN_API gpn_status gpn_graph_get_stats(const gpn_graph* graph, gpn_graph_stats* out);

/* ---- Training ---- */

typedef struct gpn_train_config {
  uint32_t n_way;
  uint32_t k_shot;
  uint32_t m_query;
  uint32_t episodes;
  double lr;
  double weight_decay;
  double beta1;
  double beta2;
  double adam_eps;
  double dropout;
  double centrality_eps;
  uint32_t eval_every;
  uint32_t patience;
  uint32_t val_tasks;
  uint64_t seed;
  gpn_strategy strategy;
  gpn_precision precision;
} gpn_train_config;

GPN_API void gpn_train_config_default(gpn_train_config* config);

/* Called once per episode. `val_accuracy` is meaningful when has_val != 0. */
typedef void (*gpn_history_fn)(uint32_t episode, double loss, int has_val, double val_accuracy,
                               void* user);

GPN_API gpn_status gpn_train(const gpn_graph* graph, const gpn_train_config* config,
                             gpn_history_fn on_record, void* user, gpn_model** out);

typedef struct gpn_train_summary {
  uint32_t episodes_run;
  uint32_t best_episode;
  int has_best_val;
  double best_val_accuracy;
  int stopped_early;
} gpn_train_summary;

/* Zero-filled for models that were loaded rather than trained. */
GPN_API gpn_status gpn_model_get_summary(const gpn_model* model, gpn_train_summary* out);
GPN_API gpn_strategy gpn_model_strategy(const gpn_model* model);
GPN_API gpn_status gpn_model_save(const gpn_model* model, const char* path);
GPN_API gpn_status gpn_model_load(const char* path, gpn_model** out);
GPN_API void gpn_model_free(gpn_model* model);

/* ---- Evaluation ---- */

typedef struct gpn_eval_config {
  uint32_t n_way;
  uint32_t k_shot;
  uint32_t m_query;
  uint32_t num_tasks;
  uint32_t repeats;
  uint64_t seed;
  gpn_strategy strategy;
  gpn_precision precision;
  double centrality_eps;
  /* 0 = hardware concurrency. */
  uint32_t threads;
  uint32_t mislabeled_per_class;
} gpn_eval_config;

GPN_API void gpn_eval_config_default(gpn_eval_config* config);

GPN_API gpn_status gpn_evaluate(const gpn_graph* graph, const gpn_model* model,
                                const gpn_eval_config* config, gpn_report** out);
GPN_API void gpn_report_free(gpn_report* report);

typedef struct gpn_metrics {
  double accuracy;
  double micro_f1;
  double macro_f1;
} gpn_metrics;

GPN_API size_t gpn_report_num_repeats(const gpn_report* report);
GPN_API gpn_status gpn_report_get_repeat(const gpn_report* report, size_t index,
                                         gpn_metrics* out);
GPN_API gpn_status gpn_report_get_summary(const gpn_report* report, gpn_metrics* mean,
                                          gpn_metrics* stddev);
/* Caller frees *out with gpn_string_free. */
GPN_API gpn_status gpn_report_to_json(const gpn_report* report, char** out);
GPN_API gpn_status gpn_report_to_csv(const gpn_report* report, char** out);

/* Similarity matrix of one sampled test task as CSV (see gpn_string_free). */
GPN_API gpn_status gpn_export_similarity(const gpn_graph* graph, const gpn_model* model,
                                         const gpn_eval_config* config, char** csv_out);

/* ---- Finite-difference gradient check ---- */

typedef struct gpn_gradcheck_config {
  uint32_t seeds;
  uint32_t nodes;
  uint32_t edges;
  uint32_t feature_dim;
  double h;
  double tolerance;
  double dropout;
  gpn_strategy strategy;
  uint64_t seed;
} gpn_gradcheck_config;

typedef struct gpn_gradcheck_result {
  double max_rel_error;
  uint64_t checked;
  uint64_t skipped;
  uint32_t seeds;
  double seconds;
  int passed;
} gpn_gradcheck_result;

GPN_API void gpn_gradcheck_config_default(gpn_gradcheck_config* config);
GPN_API gpn_status gpn_gradcheck(const gpn_gradcheck_config* config, gpn_gradcheck_result* out);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // GPN_GPN_H_
