#ifndef RINGLAB_H
#define RINGLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RinglabStatus {
  RINGLAB_STATUS_OK = 0,
  RINGLAB_STATUS_NULL_POINTER = 1,
  RINGLAB_STATUS_INVALID_ARGUMENT = 2,
  RINGLAB_STATUS_NUMERICAL = 3,
  /**
   * Output buffer too small; the required length was still written.
   */
  RINGLAB_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * No rotating wave was reached.
   */
  RINGLAB_STATUS_NOT_FOUND = 5,
  RINGLAB_STATUS_PANIC = 6,
} RinglabStatus;

typedef enum RinglabOutcome {
  RINGLAB_OUTCOME_SYNC = 0,
  RINGLAB_OUTCOME_ROTATING_WAVE = 1,
  RINGLAB_OUTCOME_UNRESOLVED = 2,
} RinglabOutcome;

typedef enum RinglabTopology {
  RINGLAB_TOPOLOGY_CHAIN = 0,
  RINGLAB_TOPOLOGY_RING = 1,
  /**
   * `n` is nodes per ring.
   */
  RINGLAB_TOPOLOGY_TWO_RINGS = 2,
} RinglabTopology;

/**
 * Opaque kinetic matrix.
 */
typedef struct RinglabKinetic RinglabKinetic;

/**
 * Opaque FHN network.
 */
typedef struct RinglabNetwork RinglabNetwork;

/**
 * Opaque periodic rotating-wave orbit.
 */
typedef struct RinglabOrbit RinglabOrbit;

/**
 * Ratio summary of a kinetic spectrum.
 */
typedef struct RinglabSpectrumSummary {
  double max_im_re_ratio;
  double bound;
  bool bound_satisfied;
  bool purely_imaginary;
} RinglabSpectrumSummary;

/**
 * Result of `ringlab_network_classify`. Absent metrics are NaN.
 */
typedef struct RinglabClassification {
  enum RinglabOutcome outcome;
  /**
   * Wave mode, 0 unless `outcome` is `RotatingWave`.
   */
  uint32_t mode;
  double period;
  double tau;
  double sync_error;
  double checkpoint_time;
} RinglabClassification;

typedef struct RinglabFloquetSummary {
  double trivial_defect;
  double max_nontrivial_modulus;
  bool stable;
  double liouville_defect;
} RinglabFloquetSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null.
 */
const char *ringlab_last_error(void);

/**
 * Library version, static string.
 */
const char *ringlab_version(void);

/**
 * `cot(π/n)`, or NaN for `n < 2`.
 */
double ringlab_cot_bound(size_t n);

/**
 * Analytic synchronization threshold of a ring (`n >= 2`) or chain;
 * `topology` is a `RinglabTopology` value.
 *
 * # Safety
 * `out` must point to a writable `double`.
 */
enum RinglabStatus ringlab_sync_threshold(uint32_t topology, size_t n, double *out);

/**
 * Uniform directed cycle with rate `q`.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum RinglabStatus ringlab_kinetic_cycle(size_t n, double q, struct RinglabKinetic **out);

/**
 * Kinetic matrix from `len` rate triples: transition `j -> i` with rate
 * `q[t]`, 0-based indices.
 *
 * # Safety
 * `i`, `j` and `q` must each hold `len` elements; `out` must be writable.
 */
enum RinglabStatus ringlab_kinetic_from_rates(size_t n,
                                              const size_t *i,
                                              const size_t *j,
                                              const double *q,
                                              size_t len,
                                              struct RinglabKinetic **out);

/**
 * # Safety
 * `k` must come from a `ringlab_kinetic_*` constructor or be null.
 */
void ringlab_kinetic_free(struct RinglabKinetic *k);

/**
 * # Safety
 * `k` must be a live handle or null.
 */
size_t ringlab_kinetic_n(const struct RinglabKinetic *k);

/**
 * Eigenvalues into `re`/`im` (capacity `cap`), count into `len`, and the
 * ratio summary into `summary` (may be null).
 *
 * # Safety
 * `re` and `im` must hold `cap` doubles; `len` must be writable.
 */
enum RinglabStatus ringlab_kinetic_spectrum(const struct RinglabKinetic *k,
                                            double *re,
                                            double *im,
                                            size_t cap,
                                            size_t *len,
                                            struct RinglabSpectrumSummary *summary);

/**
 * Equilibrium distribution into `out` (`n` doubles).
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum RinglabStatus ringlab_kinetic_perron(const struct RinglabKinetic *k, double *out, size_t n);

/**
 * Evolve `P' = KP` from `p0` to `t_final` with tolerance `tol`; the final
 * distribution goes to `p_out`. Both buffers hold `n` doubles.
 *
 * # Safety
 * `p0` and `p_out` must hold `n` doubles.
 */
enum RinglabStatus ringlab_kinetic_evolve(const struct RinglabKinetic *k,
                                          const double *p0,
                                          size_t n,
                                          double t_final,
                                          double tol,
                                          double *p_out);

/**
 * FHN network with default parameters; `topology` is a
 * `RinglabTopology` value.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum RinglabStatus ringlab_network_new(uint32_t topology,
                                       size_t n,
                                       double sigma,
                                       struct RinglabNetwork **out);

/**
 * # Safety
 * `net` must come from `ringlab_network_new` or be null.
 */
void ringlab_network_free(struct RinglabNetwork *net);

/**
 * State dimension `2n` (layout `z1..zn, y1..yn`), 0 for null.
 *
 * # Safety
 * `net` must be a live handle or null.
 */
size_t ringlab_network_dim(const struct RinglabNetwork *net);

/**
 * Vector field `dx = F(x)`.
 *
 * # Safety
 * `x` and `dx` must hold `dim` doubles.
 */
enum RinglabStatus ringlab_network_field(const struct RinglabNetwork *net,
                                         const double *x,
                                         double *dx,
                                         size_t dim);

/**
 * Seeded initial state from the default box (`dim` doubles).
 *
 * # Safety
 * `out` must hold `dim` doubles.
 */
enum RinglabStatus ringlab_network_initial_state(const struct RinglabNetwork *net,
                                                 uint64_t seed,
                                                 double *out,
                                                 size_t dim);

/**
 * Simulate from the seeded initial state with checkpoints every 1000 time
 * units up to `t_final` and classify.
 *
 * # Safety
 * `out` must point to a writable `RinglabClassification`.
 */
enum RinglabStatus ringlab_network_classify(const struct RinglabNetwork *net,
                                            uint64_t seed,
                                            double t_final,
                                            struct RinglabClassification *out);

/**
 * Search a ring of `n` nodes for a Mode-1 rotating wave from the seeded
 * staggered start. Returns `NotFound` when the run does not settle on one.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum RinglabStatus ringlab_orbit_find(size_t n,
                                      double sigma,
                                      uint64_t seed,
                                      struct RinglabOrbit **out);

/**
 * # Safety
 * `orbit` must come from `ringlab_orbit_find` or be null.
 */
void ringlab_orbit_free(struct RinglabOrbit *orbit);

/**
 * Period, or NaN for null.
 *
 * # Safety
 * `orbit` must be a live handle or null.
 */
double ringlab_orbit_period(const struct RinglabOrbit *orbit);

/**
 * Neighbour lag, or NaN for null.
 *
 * # Safety
 * `orbit` must be a live handle or null.
 */
double ringlab_orbit_tau(const struct RinglabOrbit *orbit);

/**
 * Floquet multipliers (`2n` of them) into `re`/`im`, count into `len`,
 * summary into `summary` (may be null).
 *
 * # Safety
 * `re` and `im` must hold `cap` doubles; `len` must be writable.
 */
enum RinglabStatus ringlab_orbit_floquet(const struct RinglabOrbit *orbit,
                                         double *re,
                                         double *im,
                                         size_t cap,
                                         size_t *len,
                                         struct RinglabFloquetSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGLAB_H */
