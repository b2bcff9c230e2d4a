#ifndef QFIELD_H
#define QFIELD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum QfStatus {
  QF_STATUS_OK = 0,
  QF_STATUS_NULL_POINTER = 1,
  QF_STATUS_INVALID_ARGUMENT = 2,
  QF_STATUS_INVALID_UTF8 = 3,
  QF_STATUS_NUMERICAL = 4,
  QF_STATUS_SCENARIO = 5,
  QF_STATUS_IO = 6,
  QF_STATUS_PANIC = 7,
} QfStatus;

/*
 Mode amplitudes at one time, with the field coefficients built from them.
 */
typedef struct QfField QfField;

/*
 Periodic mode lattice.
 */
typedef struct QfLattice QfLattice;

/*
 Classical current source.
 */
typedef struct QfSource QfSource;

/*
 Unit system (natural or SI).
 */
typedef struct QfUnits QfUnits;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next failing call on the same thread.
 */
const char *qf_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *qf_version(void);

/*
 Natural units: `c = eps0 = hbar = k_B = 1`.
 */
struct QfUnits *qf_units_natural(void);

/*
 SI units with CODATA constants.
 */
struct QfUnits *qf_units_si(void);

/*
 # Safety
 `units` must come from `qf_units_*` and not be used afterwards.
 */
void qf_units_free(struct QfUnits *units);

/*
 Lattice of `(2 n_max + 1)^3 - 1` modes in a box of side `length`.

 # Safety
 `units` must be a live handle; `out` must be writable.
 */
enum QfStatus qf_lattice_new(const struct QfUnits *units,
                             double length,
                             uint32_t n_max,
                             struct QfLattice **out_lattice);

/*
 Number of modes (wavevectors) on the lattice; 0 for NULL.

 # Safety
 `lattice` must be NULL or a live handle.
 */
uintptr_t qf_lattice_len(const struct QfLattice *lattice);

/*
 # Safety
 `lattice` must come from `qf_lattice_new` and not be used afterwards.
 */
void qf_lattice_free(struct QfLattice *lattice);

/*
 Source from a JSON descriptor such as
 `{"kind": "switched_dipole", "p0": [0,0,1], "omega_d": 2, "ramp": 1, "width": 0.3}`.

 # Safety
 `units` must be a live handle, `json` a NUL-terminated string, `out_source` writable.
 */
enum QfStatus qf_source_from_json(const struct QfUnits *units,
                                  const char *json,
                                  struct QfSource **out_source);

/*
 # Safety
 `source` must come from `qf_source_from_json` and not be used afterwards.
 */
void qf_source_free(struct QfSource *source);

/*
 Evolve the mode amplitudes from vacuum at `t = 0` to `t` under `source`.

 # Safety
 `lattice` and `source` must be live handles; `out_field` writable.
 */
enum QfStatus qf_field_evolve(const struct QfLattice *lattice,
                              const struct QfSource *source,
                              double t,
                              struct QfField **out_field);

/*
 `<A>`, `<E>`, `<B>` at `x`; each output is a 3-vector and may be NULL.

 # Safety
 `field` must be a live handle; `x` must point to 3 doubles; non-NULL outputs to 3 doubles.
 */
enum QfStatus qf_field_at(const struct QfField *field,
                          const double *x,
                          double *out_a,
                          double *out_e,
                          double *out_b);

/*
 Radiation energy `sum hbar omega |alpha|^2` of the field.

 # Safety
 `field` and `lattice` must be live handles (the lattice the field was evolved on).
 */
enum QfStatus qf_field_energy(const struct QfField *field,
                              const struct QfLattice *lattice,
                              double *out_energy);

/*
 # Safety
 `field` must come from `qf_field_evolve` and not be used afterwards.
 */
void qf_field_free(struct QfField *field);

/*
 Vacuum variance of the electric field smeared over a Gaussian of width `sigma`.

 # Safety
 `lattice` must be a live handle; `out_variance` writable.
 */
enum QfStatus qf_vacuum_variance_smeared(const struct QfLattice *lattice,
                                         double sigma,
                                         double *out_variance);

/*
 Hydrogen 2p -> 1s spontaneous emission rate.

 # Safety
 `units` must be a live handle; `out_rate` writable.
 */
enum QfStatus qf_dipole_rate_2p1s(const struct QfUnits *units, double *out_rate);

/*
 Closed-form Cherenkov power per unit frequency; 0 below threshold.

 # Safety
 `units` must be a live handle; `out_power` writable.
 */
enum QfStatus qf_cherenkov_power(const struct QfUnits *units,
                                 double charge,
                                 double speed,
                                 double index,
                                 double omega,
                                 double *out_power);

/*
 Run a scenario given as JSON text and write its outputs to `out_dir`.
 `out_passed` receives 1 if every verdict passed, else 0. Nothing is written
 if the scenario is invalid or an analysis fails to run.

 # Safety
 `json` and `out_dir` must be NUL-terminated strings; `out_passed` writable.
 */
enum QfStatus qf_scenario_run(const char *json,
                              const char *out_dir,
                              bool emit_plot_data,
                              int32_t *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFIELD_H */
