#ifndef COIN_SIM_H
#define COIN_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CoinStatus {
  COIN_STATUS_OK = 0,
  COIN_STATUS_NULL_POINTER = 1,
  COIN_STATUS_INVALID_ARGUMENT = 2,
  COIN_STATUS_INFEASIBLE = 3,
  COIN_STATUS_OVERFLOW = 4,
  COIN_STATUS_IO = 5,
  COIN_STATUS_SIMULATION = 6,
  COIN_STATUS_INTERNAL = 7,
} CoinStatus;

typedef enum CoinOrder {
  COIN_ORDER_FE_FIRST = 0,
  COIN_ORDER_AGG_FIRST = 1,
} CoinOrder;

typedef enum CoinArchKind {
  COIN_ARCH_KIND_COIN = 0,
  COIN_ARCH_KIND_BASELINE = 1,
  COIN_ARCH_KIND_CMESH = 2,
} CoinArchKind;

/**
 * Opaque graph handle.
 */
typedef struct CoinGraph CoinGraph;

/**
 * Opaque simulation report handle.
 */
typedef struct CoinReport CoinReport;

/**
 * `width`/`height` are ignored for the baseline; the express-link mesh
 * uses span 2.
 */
typedef struct CoinArchitecture {
  enum CoinArchKind kind;
  uint32_t width;
  uint32_t height;
} CoinArchitecture;

typedef struct CoinReportSummary {
  double compute_energy;
  double intra_ce_energy;
  double inter_ce_energy;
  double total_energy;
  double communication_share;
  uint64_t latency_cycles;
  double latency_seconds;
  double edp;
  uint64_t bit_hop_count;
} CoinReportSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library from the same thread.
 */
const char *coin_last_error(void);

const char *coin_version(void);

/**
 * Synthesizes a preset graph (`cora`, `citeseer`, `pubmed`,
 * `extended-cora`, `nell`).
 */
enum CoinStatus coin_graph_preset(const char *name, uint64_t seed, struct CoinGraph **out);

/**
 * Builds a graph from `num_edges` (u, v) pairs stored flat in `edges`.
 */
enum CoinStatus coin_graph_from_edges(size_t num_nodes,
                                      const uint32_t *edges,
                                      size_t num_edges,
                                      const size_t *feature_dims,
                                      size_t num_dims,
                                      struct CoinGraph **out);

void coin_graph_free(struct CoinGraph *graph);

enum CoinStatus coin_graph_counts(const struct CoinGraph *graph,
                                  uint64_t *out_nodes,
                                  uint64_t *out_edges);

/**
 * Optimal CE count under uniform connection probabilities.
 */
enum CoinStatus coin_optimize_uniform(uint64_t nodes,
                                      double act_sum_bits,
                                      double p1,
                                      double p2,
                                      uint32_t k_min,
                                      uint32_t k_max,
                                      uint32_t *out_k);

/**
 * Optimal CE count with probabilities re-measured on `graph` at each k.
 */
enum CoinStatus coin_optimize_graph(const struct CoinGraph *graph,
                                    double act_sum_bits,
                                    uint32_t k_min,
                                    uint32_t k_max,
                                    uint32_t *out_k);

/**
 * Multiplications for a whole GCN; `COIN_STATUS_OVERFLOW` when the count
 * does not fit in 64 bits (see `coin_mult_count_wide`).
 */
enum CoinStatus coin_mult_count(uint64_t nodes,
                                const uint64_t *feature_dims,
                                size_t num_dims,
                                enum CoinOrder order,
                                uint64_t *out);

/**
 * 128-bit multiplication count split into low and high words.
 */
enum CoinStatus coin_mult_count_wide(uint64_t nodes,
                                     const uint64_t *feature_dims,
                                     size_t num_dims,
                                     enum CoinOrder order,
                                     uint64_t *out_lo,
                                     uint64_t *out_hi);

/**
 * Full pipeline for one architecture. `hardware_json` may be null for the
 * default hardware.
 */
enum CoinStatus coin_run(const struct CoinGraph *graph,
                         struct CoinArchitecture architecture,
                         const char *hardware_json,
                         struct CoinReport **out);

void coin_report_free(struct CoinReport *report);

enum CoinStatus coin_report_summary(const struct CoinReport *report, struct CoinReportSummary *out);

/**
 * JSON rendering of the report; release with `coin_string_free`.
 */
enum CoinStatus coin_report_to_json(const struct CoinReport *report, char **out);

void coin_string_free(char *s);

/**
 * Simulates every layer of a trace file on a `width x height` mesh and
 * reports the summed drain cycles.
 */
enum CoinStatus coin_simulate_trace_file(const char *path,
                                         uint32_t width,
                                         uint32_t height,
                                         uint64_t *out_total_cycles);

/**
 * Contention-free packet latency on a default-parameter mesh.
 */
enum CoinStatus coin_zero_load_latency(uint64_t size_bits,
                                       uint32_t src,
                                       uint32_t dst,
                                       uint32_t width,
                                       uint32_t height,
                                       uint64_t *out_cycles);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COIN_SIM_H */
