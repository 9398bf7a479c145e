#ifndef CROWD_CLUSTER_H
#define CROWD_CLUSTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcProfile {
  CC_PROFILE_BALANCED = 0,
  // `param` is the largest/smallest size ratio.
  CC_PROFILE_SKEWED = 1,
  // `param` is the exponent.
  CC_PROFILE_POWERLAW = 2,
} CcProfile;

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_INVALID_CONFIG = 3,
  CC_STATUS_IO = 4,
  CC_STATUS_ORACLE = 5,
  CC_STATUS_PANIC = 6,
} CcStatus;

// Hidden ground-truth partition.
typedef struct CcInstance CcInstance;

// Oracle session with its query ledger.
typedef struct CcSession CcSession;

// Similarity matrix `W`.
typedef struct CcSideInfo CcSideInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *cc_last_error_message(void);

// Library version as a static string.
const char *cc_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void cc_string_free(char *s);

// Draws a planted partition.
//
// # Safety
// `out` must be valid for a pointer write.
enum CcStatus cc_instance_generate(size_t n,
                                   size_t k,
                                   enum CcProfile profile,
                                   double param,
                                   uint64_t seed,
                                   struct CcInstance **out);

// # Safety
// `inst` must be null or a live handle from [`cc_instance_generate`].
void cc_instance_free(struct CcInstance *inst);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t cc_instance_n(const struct CcInstance *inst);

// Number of clusters, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t cc_instance_k(const struct CcInstance *inst);

// Copies the `n` cluster labels into `labels`.
//
// # Safety
// `inst` must be a live handle and `labels` valid for `len` writes.
enum CcStatus cc_instance_labels(const struct CcInstance *inst, size_t *labels, size_t len);

// Draws `W` for `inst` from the quantized perturbed-uniform pair `(eps, grid)`.
//
// # Safety
// `inst` must be a live handle and `out` valid for a pointer write.
enum CcStatus cc_sideinfo_example2(const struct CcInstance *inst,
                                   double eps,
                                   size_t grid,
                                   uint64_t seed,
                                   struct CcSideInfo **out);

// # Safety
// `w` must be null or a live handle.
void cc_sideinfo_free(struct CcSideInfo *w);

// Reads `w(u, v)` for `u ≠ v`.
//
// # Safety
// `w` must be a live handle and `out` valid for a write.
enum CcStatus cc_sideinfo_value(const struct CcSideInfo *w, size_t u, size_t v, double *out);

// Opens an oracle over `inst`; `p = 0` gives a perfect oracle, otherwise
// answers are flipped with probability `p`.
//
// # Safety
// `inst` must be a live handle and `out` valid for a pointer write.
enum CcStatus cc_session_new(const struct CcInstance *inst,
                             double p,
                             uint64_t seed,
                             struct CcSession **out);

// # Safety
// `s` must be null or a live handle.
void cc_session_free(struct CcSession *s);

// Asks whether `u` and `v` share a cluster.
//
// # Safety
// `s` must be a live handle and `same` valid for a write.
enum CcStatus cc_session_query(struct CcSession *s, size_t u, size_t v, bool *same);

// Distinct pairs asked so far, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live handle.
size_t cc_session_query_count(const struct CcSession *s);

// Runs a JSON experiment config and returns the report CSV in `csv_out`.
// Free the result with [`cc_string_free`].
//
// # Safety
// `config_json` must be a nul-terminated string and `csv_out` valid for a
// pointer write.
enum CcStatus cc_run_experiment(const char *config_json, char **csv_out);

// Like [`cc_run_experiment`] but returns per-configuration summaries as JSON.
//
// # Safety
// Same as [`cc_run_experiment`].
enum CcStatus cc_summarize_experiment(const char *config_json, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWD_CLUSTER_H */
