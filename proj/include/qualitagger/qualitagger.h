#ifndef QUALITAGGER_H
#define QUALITAGGER_H

/* C interface to the qualitagger library.
 *
 * Every fallible call returns a qt_status. On failure, qt_last_error() holds
 * a message for the calling thread until its next library call. Strings the
 * library hands out are released with qt_string_free; handles with their
 * matching *_free function. Passing NULL to a free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(QT_BUILDING_LIBRARY)
#define QT_API __attribute__((visibility("default")))
#else
#define QT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qt_status {
  QT_OK = 0,
  QT_ERR_USAGE = 1,   /* invalid argument or option */
  QT_ERR_DATA = 2,    /* malformed or insufficient input data */
  QT_ERR_IO = 3,      /* file system failure */
  QT_ERR_BACKEND = 4, /* scoring backend failure */
  QT_ERR_INTERNAL = 5
} qt_status;

typedef enum qt_magnitude {
  QT_NEGLIGIBLE = 0,
  QT_SMALL = 1,
  QT_MEDIUM = 2,
  QT_LARGE = 3
} qt_magnitude;

#define QT_QUALITY_COUNT 7

QT_API const char* qt_version(void);
QT_API const char* qt_last_error(void);
QT_API void qt_string_free(char* s);

/* Quality names in canonical order: index 0..6 -> "maintainability", ... */
QT_API const char* qt_quality_name(int index);
/* Case-insensitive; writes the canonical index. */
QT_API qt_status qt_quality_parse(const char* name, int* out_index);

/* Bit i of out_bits set when quality i matches one of the labels. */
QT_API qt_status qt_match_quality_labels(const char* const* labels, size_t n, uint8_t* out_bits);

/* *out is NULL when the text is rejected as too short. */
QT_API qt_status qt_clean_text(const char* raw, size_t min_len, char** out);
QT_API int qt_is_english(const char* text);

/* ---- statistics ---- */

typedef struct qt_binary_report {
  double precision, recall, accuracy, f1, mcc, auc;
  uint64_t tp, fp, tn, fn;
  size_t n;
} qt_binary_report;

QT_API qt_status qt_evaluate_binary(const double* scores, const int* truths, size_t n,
                                    double threshold, qt_binary_report* out);
QT_API qt_status qt_mcnemar_exact(uint64_t b, uint64_t c, double* out_p);
QT_API qt_status qt_cliffs_delta(const double* xs, size_t nx, const double* ys, size_t ny,
                                 double* out_delta, qt_magnitude* out_magnitude);
QT_API qt_magnitude qt_delta_magnitude(double delta);
QT_API char qt_magnitude_letter(qt_magnitude m);

/* ---- models and scoring ---- */

typedef struct qt_model qt_model;

QT_API qt_status qt_model_load(const char* path, qt_model** out);
QT_API qt_status qt_model_score(const qt_model* model, const char* text, double* out_score);
QT_API int qt_model_quality(const qt_model* model);
QT_API void qt_model_free(qt_model* model);

/* Remote scoring backend speaking the /v1/predict protocol. */
typedef struct qt_backend qt_backend;

QT_API qt_status qt_backend_connect(const char* url, const char* model_name, qt_backend** out);
/* out_scores must hold n doubles. */
QT_API qt_status qt_backend_score(const qt_backend* backend, const char* const* texts, size_t n,
                                  double* out_scores);
/* Writes the /v1/health JSON document. */
QT_API qt_status qt_backend_health(const char* url, char** out_json);
QT_API void qt_backend_free(qt_backend* backend);

/* Seven-member ensemble, from a model directory or a backend URL. */
typedef struct qt_ensemble qt_ensemble;

QT_API qt_status qt_ensemble_load(const char* model_dir, double threshold, qt_ensemble** out);
QT_API qt_status qt_ensemble_connect(const char* url, double threshold, qt_ensemble** out);
/* issue_json: one issue record; writes the TagSet JSON. */
QT_API qt_status qt_ensemble_tag(const qt_ensemble* ensemble, const char* issue_json,
                                 char** out_json);
QT_API void qt_ensemble_free(qt_ensemble* ensemble);

/* In-process HTTP scoring server over a model directory. port 0 picks a
 * free port; the bound port is written to *out_port. */
typedef struct qt_stub_server qt_stub_server;

QT_API qt_status qt_stub_server_start(const char* model_dir, const char* host, int port,
                                      qt_stub_server** out, int* out_port);
QT_API void qt_stub_server_free(qt_stub_server* server);

/* ---- pipeline stages ----
 * Output paths of "-" write to standard output. Optional string fields
 * accept NULL. On success *out_summary (if non-NULL) receives a JSON
 * summary of the run. Randomized stages fail with QT_ERR_USAGE unless
 * has_seed is set. */

typedef struct qt_mine_options {
  const char* const* inputs;
  size_t input_count;
  const char* out;
} qt_mine_options;

typedef struct qt_clean_options {
  const char* input;
  const char* out;
  size_t min_len;
} qt_clean_options;

typedef struct qt_build_dataset_options {
  const char* input;
  const char* out;
  const char* quality;
  int has_seed;
  uint64_t seed;
  size_t min_len;
} qt_build_dataset_options;

typedef struct qt_split_options {
  const char* input;
  const char* out;
  int has_seed;
  uint64_t seed;
  int k;
  double test_fraction;
  int leave_one_out;
} qt_split_options;

typedef struct qt_train_options {
  const char* input;
  const char* out;
  int has_seed;
  uint64_t seed;
  const char* manifest;
  int multiclass;
  int cross_validate;
  int k;
  const char* cv_report;
  double threshold;
  double learning_rate;
  int epochs;
  double weight_decay;
  int batch_size;
  uint32_t feature_dim;
} qt_train_options;

typedef struct qt_tag_options {
  const char* input;
  const char* out;
  const char* model_dir;
  const char* backend_url; /* NULL falls back to QUALITAGGER_BACKEND_URL */
  const char* rules;
  double threshold;
} qt_tag_options;

typedef struct qt_evaluate_options {
  const char* preds;
  const char* truth;
  const char* out;
  const char* quality;
  double threshold;
  const char* format; /* "json", "text", "csv" */
} qt_evaluate_options;

typedef struct qt_compare_options {
  const char* preds_a;
  const char* preds_b;
  const char* truth;
  const char* out;
  const char* quality;
  double threshold;
  size_t iterations;
  int has_seed;
  uint64_t seed;
  const char* format;
} qt_compare_options;

typedef struct qt_analyze_options {
  const char* input;
  const char* out;
  int has_total;
  size_t total_issues;
  const char* repo;
  const char* format;
} qt_analyze_options;

typedef struct qt_serve_options {
  const char* model_dir;
  const char* host;
  int port;
  int stdio;
  const char* port_file;
} qt_serve_options;

/* Defaults: min_len 30, k 5, threshold 0.9, test_fraction 0.2, 10000
 * bootstrap iterations, lr 0.1, 10 epochs, weight decay 0.01, batch 32,
 * feature_dim 2^18, format "json", port 8080 on 127.0.0.1. */
QT_API void qt_clean_options_init(qt_clean_options* o);
QT_API void qt_build_dataset_options_init(qt_build_dataset_options* o);
QT_API void qt_split_options_init(qt_split_options* o);
QT_API void qt_train_options_init(qt_train_options* o);
QT_API void qt_tag_options_init(qt_tag_options* o);
QT_API void qt_evaluate_options_init(qt_evaluate_options* o);
QT_API void qt_compare_options_init(qt_compare_options* o);
QT_API void qt_analyze_options_init(qt_analyze_options* o);
QT_API void qt_serve_options_init(qt_serve_options* o);

QT_API qt_status qt_run_mine(const qt_mine_options* o, char** out_summary);
QT_API qt_status qt_run_clean(const qt_clean_options* o, char** out_summary);
QT_API qt_status qt_run_build_dataset(const qt_build_dataset_options* o, char** out_summary);
QT_API qt_status qt_run_split(const qt_split_options* o, char** out_summary);
QT_API qt_status qt_run_train(const qt_train_options* o, char** out_summary);
QT_API qt_status qt_run_tag(const qt_tag_options* o, char** out_summary);
QT_API qt_status qt_run_evaluate(const qt_evaluate_options* o, char** out_summary);
QT_API qt_status qt_run_compare(const qt_compare_options* o, char** out_summary);
QT_API qt_status qt_run_analyze(const qt_analyze_options* o, char** out_summary);
/* Blocks until input ends (stdio) or the process is stopped (HTTP). */
QT_API qt_status qt_run_serve(const qt_serve_options* o);

#ifdef __cplusplus
}
#endif

#endif
