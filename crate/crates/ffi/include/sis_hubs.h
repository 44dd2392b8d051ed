#ifndef SIS_HUBS_H
#define SIS_HUBS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SisStatus {
  SIS_STATUS_OK = 0,
  SIS_STATUS_NULL_POINTER = 1,
  SIS_STATUS_INVALID_PARAMETER = 2,
  SIS_STATUS_FORMAT = 3,
  SIS_STATUS_IO = 4,
  SIS_STATUS_STATE = 5,
  SIS_STATUS_DATA = 6,
  SIS_STATUS_CAPACITY = 7,
  SIS_STATUS_INTERNAL = 8,
  SIS_STATUS_PANIC = 9,
  SIS_STATUS_BUFFER_TOO_SMALL = 10,
} SisStatus;

/**
 * Opaque event-log handle.
 */
typedef struct SisEventLog SisEventLog;

/**
 * Opaque graph handle.
 */
typedef struct SisGraph SisGraph;

/**
 * One state change. `kind` is 1 for an infection, 0 for a recovery.
 */
typedef struct SisEvent {
  double time;
  uint32_t vertex;
  uint8_t kind;
} SisEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *sis_last_error_message(void);

/**
 * Generates `n_low` vertices of degree `d` plus `hubs` hubs of degree
 * `hub_degree`.
 *
 * # Safety
 * `out` must be a valid pointer to a `SisGraph*`.
 */
enum SisStatus sis_graph_generate(size_t n_low,
                                  size_t d,
                                  size_t hubs,
                                  size_t hub_degree,
                                  uint64_t seed,
                                  struct SisGraph **out);

/**
 * Loads an edge-list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum SisStatus sis_graph_load(const char *path, struct SisGraph **out);

/**
 * Writes the graph as an edge-list file.
 *
 * # Safety
 * `graph` must come from this library; `path` must be NUL-terminated.
 */
enum SisStatus sis_graph_save(const struct SisGraph *graph, const char *path);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or come from this library.
 */
size_t sis_graph_vertex_count(const struct SisGraph *graph);

/**
 * # Safety
 * `graph` must come from this library; `out` must be valid.
 */
enum SisStatus sis_graph_degree(const struct SisGraph *graph, uint32_t vertex, size_t *out);

/**
 * Copies the hub labels into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` elements; `out_len` must be valid.
 */
enum SisStatus sis_graph_hubs(const struct SisGraph *graph,
                              uint32_t *buf,
                              size_t cap,
                              size_t *out_len);

/**
 * # Safety
 * `graph` must be null or an unfreed handle from this library.
 */
void sis_graph_free(struct SisGraph *graph);

/**
 * Simulates on `[0, horizon]` from a random initial set: a `init_fraction`
 * share of vertices, plus every hub if `force_hubs` is non-zero.
 * `horizon` may be `INFINITY`.
 *
 * # Safety
 * `graph` must come from this library; `out` must be valid.
 */
enum SisStatus sis_simulate(const struct SisGraph *graph,
                            double beta,
                            double gamma,
                            double horizon,
                            double init_fraction,
                            uint8_t force_hubs,
                            uint64_t seed,
                            struct SisEventLog **out);

/**
 * Simulates from the explicit initial set `initial[0..len]`.
 *
 * # Safety
 * `initial` must hold `len` elements (may be null when `len` is 0).
 */
enum SisStatus sis_simulate_explicit(const struct SisGraph *graph,
                                     double beta,
                                     double gamma,
                                     double horizon,
                                     const uint32_t *initial,
                                     size_t len,
                                     uint64_t seed,
                                     struct SisEventLog **out);

/**
 * Loads an event-log file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum SisStatus sis_event_log_load(const char *path, struct SisEventLog **out);

/**
 * # Safety
 * `log` must come from this library; `path` must be NUL-terminated.
 */
enum SisStatus sis_event_log_save(const struct SisEventLog *log, const char *path);

/**
 * Number of events, or 0 for a null handle.
 *
 * # Safety
 * `log` must be null or come from this library.
 */
size_t sis_event_log_len(const struct SisEventLog *log);

/**
 * # Safety
 * `log` must come from this library; `out` must be valid.
 */
enum SisStatus sis_event_log_event(const struct SisEventLog *log,
                                   size_t index,
                                   struct SisEvent *out);

/**
 * # Safety
 * `log` must be null or an unfreed handle from this library.
 */
void sis_event_log_free(struct SisEventLog *log);

/**
 * The `m` eligible vertices with the smallest `R_K`, sorted by id.
 *
 * # Safety
 * `buf` must hold `cap` elements; `out_len` must be valid.
 */
enum SisStatus sis_estimate_top_m(const struct SisEventLog *log,
                                  size_t k,
                                  size_t m,
                                  uint32_t *buf,
                                  size_t cap,
                                  size_t *out_len);

/**
 * Eligible vertices with `R_K <= h`, sorted by id.
 *
 * # Safety
 * `buf` must hold `cap` elements; `out_len` must be valid.
 */
enum SisStatus sis_estimate_threshold(const struct SisEventLog *log,
                                      size_t k,
                                      double h,
                                      uint32_t *buf,
                                      size_t cap,
                                      size_t *out_len);

/**
 * `K = ceil(3 / alpha)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum SisStatus sis_theorem_k(double alpha, size_t *out);

/**
 * `h = n^(-alpha / 2)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum SisStatus sis_theorem_h(size_t n, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIS_HUBS_H */
