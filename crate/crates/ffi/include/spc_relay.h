#ifndef SPC_RELAY_H
#define SPC_RELAY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SpcStatus {
  SPC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SPC_STATUS_INVALID_UTF8 = 2,
  SPC_STATUS_PARSE = 3,
  SPC_STATUS_VALIDATION = 4,
  SPC_STATUS_IO = 5,
  /**
   * A numerical subproblem could not be solved.
   */
  SPC_STATUS_SOLVER = 6,
  /**
   * Out-of-range argument or index.
   */
  SPC_STATUS_DOMAIN = 7,
  /**
   * Internal failure, including a caught panic.
   */
  SPC_STATUS_INTERNAL = 8,
} SpcStatus;

/**
 * Optimization scheme.
 */
typedef enum SpcScheme {
  /**
   * Joint trajectory, resource and blocklength design.
   */
  SPC_SCHEME_JTRD = 0,
  /**
   * Resource allocation with the straight-line trajectory.
   */
  SPC_SCHEME_RDFT = 1,
  /**
   * Trajectory design with fixed resources.
   */
  SPC_SCHEME_TDFR = 2,
  /**
   * The initial feasible point only.
   */
  SPC_SCHEME_INITIAL = 3,
} SpcScheme;

/**
 * Opaque handle to a finished run.
 */
typedef struct SpcResult SpcResult;

/**
 * Opaque scenario handle.
 */
typedef struct SpcScenario SpcScenario;

/**
 * Per-slot values of a final solution (`slot` is 1-based).
 */
typedef struct SpcSlotProfile {
  uint32_t slot;
  double x;
  double y;
  double z;
  double v_xy;
  double v_z;
  double p_a;
  double p_r;
  double l_u;
  double l_d;
  double r_u_fbl;
  double r_d_fbl;
  double r_u_inf;
  double r_d_inf;
  double b_s;
} SpcSlotProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *spc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spc_version(void);

/**
 * Reference scenario.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum SpcStatus spc_scenario_default(struct SpcScenario **out);

/**
 * Parse and validate a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpcStatus spc_scenario_parse(const char *toml, struct SpcScenario **out);

/**
 * Load and validate a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpcStatus spc_scenario_load(const char *path, struct SpcScenario **out);

/**
 * Set one of `l_max`, `eve_uncertainty`, `mission_time`, `eps_r`, `eps_b`,
 * `eta_e`. The scenario is left unchanged if the result would be invalid.
 *
 * # Safety
 * `scenario` must be a live handle and `key` a NUL-terminated string.
 */
enum SpcStatus spc_scenario_set(struct SpcScenario *scenario, const char *key, double value);

/**
 * Number of slots, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t spc_scenario_n_slots(const struct SpcScenario *scenario);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void spc_scenario_free(struct SpcScenario *scenario);

/**
 * Run `scheme` on `scenario`.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum SpcStatus spc_run(const struct SpcScenario *scenario,
                       enum SpcScheme scheme,
                       struct SpcResult **out);

/**
 * Final EAST in bits per second, or NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double spc_result_east(const struct SpcResult *result);

/**
 * EAST of the initial feasible point, or NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double spc_result_initial_east(const struct SpcResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
bool spc_result_converged(const struct SpcResult *result);

/**
 * Number of outer iterations performed.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t spc_result_iterations(const struct SpcResult *result);

/**
 * Copy up to `len` EAST values (initial point first) into `buf` and return
 * the full trace length. Pass a null `buf` to query the length.
 *
 * # Safety
 * `result` must be null or a live handle; `buf` must be null or point to
 * `len` writable doubles.
 */
size_t spc_result_trace(const struct SpcResult *result, double *buf, size_t len);

/**
 * Number of slot profiles in the result.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t spc_result_n_slots(const struct SpcResult *result);

/**
 * Profile of slot `index` (0-based).
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum SpcStatus spc_result_profile(const struct SpcResult *result,
                                  size_t index,
                                  struct SpcSlotProfile *out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void spc_result_free(struct SpcResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPC_RELAY_H */
