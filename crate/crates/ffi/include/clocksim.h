#ifndef CLOCKSIM_H
#define CLOCKSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClocksimStatus {
  CLOCKSIM_STATUS_OK = 0,
  CLOCKSIM_STATUS_NULL_POINTER = 1,
  CLOCKSIM_STATUS_INVALID_UTF8 = 2,
  CLOCKSIM_STATUS_PARSE_ERROR = 3,
  CLOCKSIM_STATUS_ENGINE_ERROR = 4,
  CLOCKSIM_STATUS_INVALID_ARGUMENT = 5,
  CLOCKSIM_STATUS_PANIC = 6,
} ClocksimStatus;

typedef enum ClocksimEngine {
  CLOCKSIM_ENGINE_PERTURBATIVE = 0,
  CLOCKSIM_ENGINE_NONPERTURBATIVE = 1,
  CLOCKSIM_ENGINE_LATTICE_ODE = 2,
} ClocksimEngine;

typedef enum ClocksimPreset {
  /**
   * 88Sr in a 532 nm lattice, 10 um separation, 1 s hold.
   */
  CLOCKSIM_PRESET_STRONTIUM = 0,
  /**
   * Reduced units with eps_k = eps_g = 0.01.
   */
  CLOCKSIM_PRESET_REDUCED_DEMO = 1,
} ClocksimPreset;

/**
 * Opaque experiment handle.
 */
typedef struct ClocksimSpec ClocksimSpec;

typedef struct ClocksimClockPhases {
  double delta_phi;
  double delta_d;
  double delta_u;
} ClocksimClockPhases;

typedef struct ClocksimObservables {
  double delta_phi;
  double delta_d;
  double delta_u;
  double delta_split;
  double p0;
  double p1;
  double total;
  double total_normalized;
  double difference;
  double visibility;
  double visibility_drop;
  double mean_omega0;
  double fractional_shift;
  double eps_k;
  double eps_g;
} ClocksimObservables;

typedef struct ClocksimEpsilons {
  double eps_k;
  double eps_g;
} ClocksimEpsilons;

typedef struct ClocksimPartition {
  uint64_t n;
  double tau;
} ClocksimPartition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses sequence text into a new handle written to `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer. The
 * handle must be released with [`clocksim_spec_free`].
 */
enum ClocksimStatus clocksim_spec_parse(const char *text, struct ClocksimSpec **out);

/**
 * Creates a handle for a built-in experiment, one of [`ClocksimPreset`].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ClocksimStatus clocksim_spec_preset(uint32_t preset, struct ClocksimSpec **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void clocksim_spec_free(struct ClocksimSpec *handle);

/**
 * Sets the lattice hold `T_B`.
 *
 * # Safety
 * `handle` must be a live handle.
 */
enum ClocksimStatus clocksim_spec_set_hold(struct ClocksimSpec *handle, double t_b);

/**
 * Writes the canonical sequence text to `*out`. Free it with
 * [`clocksim_string_free`].
 *
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum ClocksimStatus clocksim_spec_to_text(const struct ClocksimSpec *handle, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void clocksim_string_free(char *s);

/**
 * Clock phases `(delta_phi, delta_d, delta_u)` from `engine`, one of
 * [`ClocksimEngine`].
 *
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum ClocksimStatus clocksim_clock_phases(const struct ClocksimSpec *handle,
                                          uint32_t engine,
                                          struct ClocksimClockPhases *out);

/**
 * Every observable of one run.
 *
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum ClocksimStatus clocksim_observables(const struct ClocksimSpec *handle,
                                         uint32_t engine,
                                         struct ClocksimObservables *out);

/**
 * Kinetic and gravitational correction sizes.
 *
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum ClocksimStatus clocksim_epsilon_params(const struct ClocksimSpec *handle,
                                            struct ClocksimEpsilons *out);

/**
 * Splits `t_b` into `n` whole periods `tau_b` plus a residual in
 * `[-tau_b/2, tau_b/2)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ClocksimStatus clocksim_bloch_partition(double t_b,
                                             double tau_b,
                                             struct ClocksimPartition *out);

/**
 * Ground-state probability at port `j` (0 or 1; other values count as 1).
 */
double clocksim_port_probability(double delta_phi, double delta_d, double delta_u, uint8_t j);

double clocksim_total_ground_probability(double delta_d, double delta_u);

/**
 * `P^(0) - P^(1)`.
 */
double clocksim_probability_difference(double delta_phi, double delta_d, double delta_u);

double clocksim_visibility(double eps_g, double omega0, double t_b);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *clocksim_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *clocksim_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLOCKSIM_H */
