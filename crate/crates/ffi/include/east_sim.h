#ifndef EAST_SIM_H
#define EAST_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EastStatus {
  EAST_STATUS_OK = 0,
  EAST_STATUS_NULL_POINTER = 1,
  EAST_STATUS_INVALID_UTF8 = 2,
  EAST_STATUS_CONFIG = 3,
  EAST_STATUS_DOMAIN = 4,
  EAST_STATUS_DATA = 5,
  EAST_STATUS_USAGE = 6,
  EAST_STATUS_IO = 7,
  EAST_STATUS_CSV = 8,
  EAST_STATUS_PANIC = 9,
} EastStatus;

/**
 * Simulation parameters.
 */
typedef struct EastConfig EastConfig;

/**
 * Finished simulation with its per-round records.
 */
typedef struct EastRun EastRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * Valid until the next failing call on the same thread.
 */
const char *east_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *east_version(void);

/**
 * New config holding the defaults.
 */
struct EastConfig *east_config_default(void);

/**
 * Reads a `key = value` config file into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum EastStatus east_config_from_file(const char *path, struct EastConfig **out);

/**
 * Sets one config key. The config is unchanged on failure.
 *
 * # Safety
 * `cfg` must come from this library; `key` and `value` must be NUL-terminated.
 */
enum EastStatus east_config_set(struct EastConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards. Null is ignored.
 */
void east_config_free(struct EastConfig *cfg);

/**
 * Validates `cfg`, runs it to completion and stores the run in `*out`.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be writable.
 */
enum EastStatus east_run(const struct EastConfig *cfg, struct EastRun **out);

/**
 * Rounds executed; fewer than configured if every node died.
 *
 * # Safety
 * `run` must be null or come from [`east_run`].
 */
size_t east_run_rounds_executed(const struct EastRun *run);

/**
 * Beacons plus ACKs over the whole run.
 *
 * # Safety
 * `run` must be null or come from [`east_run`].
 */
uint64_t east_run_control_packets(const struct EastRun *run);

/**
 * Radio energy spent by all nodes, joules.
 *
 * # Safety
 * `run` must be null or come from [`east_run`].
 */
double east_run_energy_j(const struct EastRun *run);

/**
 * Nodes alive after the last executed round.
 *
 * # Safety
 * `run` must be null or come from [`east_run`].
 */
size_t east_run_survivors(const struct EastRun *run);

/**
 * Writes the run's CSVs, figures and manifest under `dir`.
 *
 * # Safety
 * `run` must come from [`east_run`]; `dir` must be NUL-terminated.
 */
enum EastStatus east_run_write_csv(const struct EastRun *run, const char *dir);

/**
 * # Safety
 * `run` must come from [`east_run`] and not be used afterwards. Null is ignored.
 */
void east_run_free(struct EastRun *run);

/**
 * RSSI loss in dBm at `temp_c` degrees Celsius.
 *
 * # Safety
 * `out` must be writable.
 */
enum EastStatus east_rssi_loss(double temp_c, double *out);

/**
 * Compensating power level in dBm for an RSSI loss in dBm.
 *
 * # Safety
 * `out` must be writable.
 */
enum EastStatus east_power_level(double loss_dbm, double *out);

/**
 * Free-space base power requirement in dBm at `distance_m`, default radio.
 *
 * # Safety
 * `out` must be writable.
 */
enum EastStatus east_base_requirement(double distance_m, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EAST_SIM_H */
