#ifndef COEXNET_H
#define COEXNET_H

/* This file is generated by cbindgen from coexnet-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status of a C-ABI call. Values align with the CLI exit codes.
typedef enum CxnStatus {
  CXN_STATUS_OK = 0,
  // Unreadable files, malformed inputs, bad arguments.
  CXN_STATUS_INPUT_ERROR = 2,
  // Singular statistics, non-positive-definite matrices, degenerate
  // networks.
  CXN_STATUS_NUMERICAL_ERROR = 3,
  // Invariant violations inside the library.
  CXN_STATUS_INTERNAL_ERROR = 4,
  // A required pointer argument was null.
  CXN_STATUS_NULL_POINTER = 5,
} CxnStatus;

// Cluster decomposition with per-gene indices.
typedef struct CxnClusters CxnClusters;

// Owned observation matrix with names and labels.
typedef struct CxnData CxnData;

// Fitted model plus the variable names and labels it was fitted with.
typedef struct CxnModel CxnModel;

// Monte Carlo study report.
typedef struct CxnMseReport CxnMseReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the most recent error message for this thread into `buf`
// (truncating to `cap − 1` bytes, always NUL-terminated when `cap > 0`)
// and returns the full message length in bytes.
size_t cxn_last_error_message(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *cxn_version(void);

// Reads a CSV/TSV data file (header row of names, one row per
// observation). `log2` applies a log2 transform at ingestion.
enum CxnStatus cxn_data_read_csv(const char *path, bool log2, struct CxnData **out);

// Attaches a two-column labels file (name, 0/1). Unlisted variables
// default to non-DE.
enum CxnStatus cxn_data_attach_labels(struct CxnData *data, const char *path);

size_t cxn_data_n(const struct CxnData *data);

size_t cxn_data_p(const struct CxnData *data);

void cxn_data_free(struct CxnData *data);

// Fits the minimum-BIC spanning forest and, when `decomposable` is set,
// extends it by chordality-preserving additions. `max_clique_size` and
// `max_edges` of 0 mean "default" and "unlimited".
enum CxnStatus cxn_fit(const struct CxnData *data,
                       bool decomposable,
                       size_t max_clique_size,
                       size_t max_edges,
                       struct CxnModel **out);

double cxn_model_bic(const struct CxnModel *model);

size_t cxn_model_edge_count(const struct CxnModel *model);

size_t cxn_model_vertex_count(const struct CxnModel *model);

// Computes and stores the closed-form covariance estimate from the
// original data.
enum CxnStatus cxn_model_compute_sigma(struct CxnModel *model, const struct CxnData *data);

// Writes the model snapshot JSON.
enum CxnStatus cxn_model_write_json(const struct CxnModel *model, const char *path);

// Loads a model snapshot JSON.
enum CxnStatus cxn_model_read_json(const char *path, struct CxnModel **out);

void cxn_model_free(struct CxnModel *model);

// Clusters the model's network using its stored labels. Pass NaN for
// `alpha` to use the proportion of flagged variables.
enum CxnStatus cxn_cluster(const struct CxnModel *model, double alpha, struct CxnClusters **out);

size_t cxn_clusters_count(const struct CxnClusters *clusters);

// 1 for a DEGD cluster, 0 for NDEGD, −1 on bad arguments.
int cxn_clusters_class(const struct CxnClusters *clusters, size_t index);

size_t cxn_clusters_size(const struct CxnClusters *clusters, size_t index);

// Count of differentially expressed members.
size_t cxn_clusters_eta(const struct CxnClusters *clusters, size_t index);

double cxn_clusters_rho0(const struct CxnClusters *clusters, size_t index);

double cxn_clusters_rho(const struct CxnClusters *clusters, size_t index);

// Per-gene uncertainty index; NaN for genes that carry none (not
// differentially expressed).
double cxn_clusters_gene_rho(const struct CxnClusters *clusters, size_t gene);

// Cluster id of a gene, or `SIZE_MAX` on bad arguments.
size_t cxn_clusters_gene_cluster(const struct CxnClusters *clusters, size_t gene);

// Writes the cluster table and per-gene table CSVs.
enum CxnStatus cxn_clusters_write_csv(const struct CxnClusters *clusters,
                                      const char *clusters_path,
                                      const char *genes_path);

void cxn_clusters_free(struct CxnClusters *clusters);

// Runs the Monte Carlo recovery study. The model must either carry a
// stored covariance or `data` must be supplied to recompute it; the
// model's labels are frozen as the reference classification.
enum CxnStatus cxn_simulate(const struct CxnModel *model,
                            const struct CxnData *data,
                            const size_t *sizes,
                            size_t sizes_len,
                            size_t replicates,
                            uint64_t seed,
                            struct CxnMseReport **out);

size_t cxn_mse_rows(const struct CxnMseReport *report);

// Reads one row of the study report.
enum CxnStatus cxn_mse_row(const struct CxnMseReport *report,
                           size_t index,
                           size_t *out_n,
                           double *out_mse,
                           double *out_stderr,
                           size_t *out_replicates);

enum CxnStatus cxn_mse_write_csv(const struct CxnMseReport *report, const char *path);

void cxn_mse_free(struct CxnMseReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COEXNET_H */
