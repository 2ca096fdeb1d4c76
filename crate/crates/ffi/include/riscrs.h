#ifndef RISCRS_H
#define RISCRS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum RiscrsStatus {
  RISCRS_STATUS_OK = 0,
  RISCRS_STATUS_NULL_POINTER = 1,
  RISCRS_STATUS_INVALID_ARGUMENT = 2,
  RISCRS_STATUS_CONFIG = 3,
  RISCRS_STATUS_SOLVER = 4,
  RISCRS_STATUS_IO = 5,
  RISCRS_STATUS_PANIC = 6,
} RiscrsStatus;

// Transmission scheme.
typedef enum RiscrsStrategy {
  RISCRS_STRATEGY_RIS_CRS = 0,
  RISCRS_STRATEGY_RIS_RSMA = 1,
  RISCRS_STRATEGY_RIS_SDMA = 2,
  RISCRS_STRATEGY_NORIS_CRS = 3,
  RISCRS_STRATEGY_NORIS_RSMA = 4,
  RISCRS_STRATEGY_NORIS_SDMA = 5,
} RiscrsStrategy;

// One channel realization.
typedef struct RiscrsChannel RiscrsChannel;

// Scenario parameters.
typedef struct RiscrsScenario RiscrsScenario;

// Optimized design of one strategy.
typedef struct RiscrsSolution RiscrsSolution;

// Rates of an optimized design, in bits/s/Hz.
typedef struct RiscrsReport {
  double c1_1;
  double c2_1;
  double r1_1;
  double r2_1;
  double c2_2;
  double rc;
  double r_tot[2];
  double min_rate;
  double beta;
  double a[2];
  // 1 if the design satisfies every constraint.
  uint8_t feasible;
  // 1 if an inner solve failed and the best incumbent was returned.
  uint8_t degraded;
  size_t outer_iterations;
} RiscrsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *riscrs_last_error(void);

// Library version as a static NUL-terminated string.
const char *riscrs_version(void);

// Default scenario.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum RiscrsStatus riscrs_scenario_default(struct RiscrsScenario **out);

// Scenario parsed from TOML text; missing keys take default values.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` as in `riscrs_scenario_default`.
enum RiscrsStatus riscrs_scenario_from_toml(const char *toml, struct RiscrsScenario **out);

// Scenario loaded from a TOML file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` as in `riscrs_scenario_default`.
enum RiscrsStatus riscrs_scenario_load(const char *path, struct RiscrsScenario **out);

// Sets the transmit SNR in dB (the relay power follows unless fixed).
//
// # Safety
// `scenario` must be a live handle.
enum RiscrsStatus riscrs_scenario_set_snr_db(struct RiscrsScenario *scenario, double snr_db);

// # Safety
// `scenario` must be a live handle.
enum RiscrsStatus riscrs_scenario_set_n_ris(struct RiscrsScenario *scenario, size_t n_ris);

// # Safety
// `scenario` must be a live handle.
enum RiscrsStatus riscrs_scenario_set_nt(struct RiscrsScenario *scenario, size_t nt);

// # Safety
// `scenario` must be a live handle.
enum RiscrsStatus riscrs_scenario_set_seed(struct RiscrsScenario *scenario, uint64_t seed);

// Releases a scenario; NULL is ignored.
//
// # Safety
// `scenario` must be NULL or a handle not yet freed.
void riscrs_scenario_free(struct RiscrsScenario *scenario);

// Draws the channel realization of `seed` for a scenario.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum RiscrsStatus riscrs_channel_build(const struct RiscrsScenario *scenario,
                                       uint64_t seed,
                                       struct RiscrsChannel **out);

// Transmit antennas of a channel, 0 for NULL.
//
// # Safety
// `channel` must be NULL or a live handle.
size_t riscrs_channel_nt(const struct RiscrsChannel *channel);

// RIS elements of a channel, 0 for NULL.
//
// # Safety
// `channel` must be NULL or a live handle.
size_t riscrs_channel_n_ris(const struct RiscrsChannel *channel);

// # Safety
// `channel` must be NULL or a handle not yet freed.
void riscrs_channel_free(struct RiscrsChannel *channel);

// Optimizes `strategy` on `channel` with the scenario's powers and
// tolerances, keeping the best of `n_starts` random phase starts.
//
// # Safety
// `scenario` and `channel` must be live handles; `out` must be writable.
enum RiscrsStatus riscrs_solve(const struct RiscrsScenario *scenario,
                               const struct RiscrsChannel *channel,
                               enum RiscrsStrategy strategy,
                               size_t n_starts,
                               struct RiscrsSolution **out);

// Copies the rates of a solution into `report`.
//
// # Safety
// `solution` must be a live handle; `report` must be writable.
enum RiscrsStatus riscrs_solution_report(const struct RiscrsSolution *solution,
                                         struct RiscrsReport *report);

// Full solution as a JSON object (precoders, phases in radians, rates,
// traces). Release the string with `riscrs_string_free`.
//
// # Safety
// `solution` must be a live handle; `out` must be writable.
enum RiscrsStatus riscrs_solution_to_json(const struct RiscrsSolution *solution, char **out);

// # Safety
// `solution` must be NULL or a handle not yet freed.
void riscrs_solution_free(struct RiscrsSolution *solution);

// Releases a string returned by this library; NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void riscrs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISCRS_H */
