/* basisforge C interface.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every fallible call returns a bf_status; on
 * failure bf_last_error() describes the problem for the calling thread.
 * Matrices cross the boundary in row-major order, with samples as columns.
 * Strings returned through char** are released with bf_free_string. */
#ifndef BASISFORGE_H
#define BASISFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(BASISFORGE_BUILDING)
#define BF_API __attribute__((visibility("default")))
#else
#define BF_API
#endif

typedef enum bf_status {
  BF_OK = 0,
  BF_ERR_SHAPE = 1,
  BF_ERR_CONFIG = 2,
  BF_ERR_INPUT = 3,
  BF_ERR_NUMERIC = 4,
  BF_ERR_IO = 5,
  BF_ERR_STATE = 6, /* the handle does not hold the requested item */
  BF_ERR_INTERNAL = 7
} bf_status;

BF_API const char* bf_last_error(void);
BF_API const char* bf_version(void);
/* Inner parallelism. 1 (the default) gives bit-reproducible results. */
BF_API void bf_set_num_threads(int n);
BF_API void bf_free_string(char* s);

/* ---- matrices ---- */
typedef struct bf_matrix bf_matrix;

BF_API bf_status bf_matrix_new(size_t rows, size_t cols, const double* row_major, bf_matrix** out);
BF_API bf_status bf_matrix_load_csv(const char* path, bf_matrix** out);
BF_API bf_status bf_matrix_save_csv(const bf_matrix* m, const char* path, int header);
BF_API size_t bf_matrix_rows(const bf_matrix* m);
BF_API size_t bf_matrix_cols(const bf_matrix* m);
BF_API bf_status bf_matrix_copy(const bf_matrix* m, double* row_major, size_t count);
BF_API void bf_matrix_free(bf_matrix* m);

/* ---- sample graphs ---- */
typedef struct bf_graph bf_graph;

/* k-nearest-neighbour graph on the columns of x. sigma <= 0 selects the
 * median k-NN distance. */
BF_API bf_status bf_graph_knn(const bf_matrix* x, size_t k, double sigma, bf_graph** out);
BF_API bf_status bf_graph_load_edges(const char* path, size_t n, bf_graph** out);
BF_API bf_status bf_graph_save_edges(const bf_graph* g, const char* path);
BF_API void bf_graph_free(bf_graph* g);

/* ---- static basis learning ---- */
typedef struct bf_fit bf_fit;

/* config_json is the run configuration document. When graph is NULL and the
 * config has a "graph" section, the graph is built from it. On
 * BF_ERR_NUMERIC *out still receives a handle holding the partial log. */
BF_API bf_status bf_fit_run(const bf_matrix* x, const char* config_json, const bf_graph* graph, bf_fit** out);
BF_API bf_status bf_fit_basis(const bf_fit* f, bf_matrix** out);
BF_API bf_status bf_fit_coeffs(const bf_fit* f, bf_matrix** out);
BF_API bf_status bf_fit_save_log(const bf_fit* f, const char* path, int wall_time);
/* Final objective and its terms, coherence, and the gap to the best rank-m
 * error. Contains no timings. */
BF_API bf_status bf_fit_summary(const bf_fit* f, char** json_out);
BF_API void bf_fit_free(bf_fit* f);

/* ---- basis learning with latent dynamics ---- */
typedef struct bf_dynfit bf_dynfit;

BF_API bf_status bf_dynfit_run(const bf_matrix* x, const char* config_json, bf_dynfit** out);
BF_API bf_status bf_dynfit_basis(const bf_dynfit* f, bf_matrix** out);
BF_API bf_status bf_dynfit_states(const bf_dynfit* f, bf_matrix** out);
BF_API bf_status bf_dynfit_operator(const bf_dynfit* f, bf_matrix** out);
/* Predicted observations for the `horizon` steps after the training window. */
BF_API bf_status bf_dynfit_forecast(const bf_dynfit* f, size_t horizon, bf_matrix** out);
BF_API bf_status bf_dynfit_save_log(const bf_dynfit* f, const char* path, int wall_time);
BF_API bf_status bf_dynfit_summary(const bf_dynfit* f, char** json_out);
BF_API void bf_dynfit_free(bf_dynfit* f);

/* ---- synthetic data ---- */
BF_API bf_status bf_synth_sparse(size_t d, size_t m, size_t n, size_t s, double noise, uint64_t seed,
                                 bf_matrix** x, bf_matrix** phi, bf_matrix** alpha);
BF_API bf_status bf_synth_linear(size_t d, size_t m, size_t t, double rho, double noise, uint64_t seed,
                                 bf_matrix** x, bf_matrix** phi, bf_matrix** z, bf_matrix** a);

/* ---- diagnostics ----
 * basis is required; every other argument may be NULL. With data, the
 * report includes the best rank-m tail energy (and the fit gap when codes
 * are also given). With reference, it includes the recovery matching (and
 * support recovery when both code matrices are given). */
BF_API bf_status bf_diagnose(const bf_matrix* basis, const bf_matrix* reference, const bf_matrix* data,
                             const bf_matrix* codes, const bf_matrix* reference_codes, char** json_out);

/* ---- basis-state language model ---- */
typedef struct bf_bslm bf_bslm;

typedef struct bf_bslm_eval {
  double perplexity;
  long tokens;
  double mean_latency_us;
  double p50_latency_us;
  double p95_latency_us;
  double max_latency_us;
} bf_bslm_eval;

/* On BF_ERR_NUMERIC *out still receives a handle holding the partial log. */
BF_API bf_status bf_bslm_train(const char* text, size_t len, const char* hyper_json, bf_bslm** out);
BF_API bf_status bf_bslm_save(const bf_bslm* b, const char* path);
BF_API bf_status bf_bslm_load(const char* path, bf_bslm** out);
BF_API bf_status bf_bslm_save_log(const bf_bslm* b, const char* path, int wall_time);
BF_API bf_status bf_bslm_final_perplexity(const bf_bslm* b, double* out);
BF_API bf_status bf_bslm_evaluate(const bf_bslm* b, const char* text, size_t len, bf_bslm_eval* out);
BF_API size_t bf_bslm_vocab_size(const bf_bslm* b);
BF_API void bf_bslm_free(bf_bslm* b);

#ifdef __cplusplus
}
#endif

#endif /* BASISFORGE_H */
