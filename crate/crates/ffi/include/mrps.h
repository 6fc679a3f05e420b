#ifndef MRPS_H
#define MRPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum MrpsStatus {
  MRPS_STATUS_OK = 0,
  MRPS_STATUS_NULL_POINTER = 1,
  MRPS_STATUS_INVALID_ARGUMENT = 2,
  MRPS_STATUS_PARSE = 3,
  MRPS_STATUS_IO = 4,
  MRPS_STATUS_VALIDATION = 5,
  MRPS_STATUS_DIMENSION = 6,
  MRPS_STATUS_OPTIMIZER = 7,
  MRPS_STATUS_CONFIG = 8,
  MRPS_STATUS_INTERNAL = 9,
  MRPS_STATUS_PANIC = 10,
} MrpsStatus;

// Operator pool for [`mrps_adapt`].
typedef enum MrpsPool {
  MRPS_POOL_FERMIONIC_INTER = 0,
  MRPS_POOL_FERMIONIC_FULL = 1,
  MRPS_POOL_QUBIT_INTER = 2,
} MrpsPool;

// A molecular problem: integrals, fragment partition and qubit Hamiltonian.
typedef struct MrpsProblem MrpsProblem;

// A state vector.
typedef struct MrpsState MrpsState;

// Outcome of an ADAPT-VQE run.
typedef struct MrpsAdaptSummary {
  double energy;
  double exact_energy;
  size_t iterations;
  size_t cnots;
  bool converged;
} MrpsAdaptSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated
// to `len`) and returns the full message length in bytes, or 0 when there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t mrps_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *mrps_version(void);

// Loads an FCIDUMP file. The fragment partition is read from the `.meta` sidecar next
// to it unless both `fragments` (e.g. `"0,2;1,3"`) and `electrons` (e.g. `"2,2"`) are
// given.
//
// # Safety
// String arguments must be null or NUL-terminated; `out_problem` must be null or writable.
enum MrpsStatus mrps_problem_load(const char *path,
                                  const char *fragments,
                                  const char *electrons,
                                  struct MrpsProblem **out_problem);

// # Safety
// `problem` must be null or a handle from [`mrps_problem_load`] not yet freed.
void mrps_problem_free(struct MrpsProblem *problem);

// Number of qubits (twice the number of spatial orbitals).
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_problem_n_qubits(const struct MrpsProblem *problem, size_t *out_n);

// Exact ground-state energy in the problem's electron-number sector. When `out_state`
// is non-null it receives a new state handle with the ground state.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_exact_ground_state(const struct MrpsProblem *problem,
                                        double *out_energy,
                                        struct MrpsState **out_state);

// Closed-shell Hartree–Fock determinant on the problem's register.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_hf_state(const struct MrpsProblem *problem, struct MrpsState **out_state);

// Multireference product state from fragment VQE with `layers` HEA layers and
// `restarts` seeded restarts per fragment.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_product_state(const struct MrpsProblem *problem,
                                   size_t layers,
                                   size_t restarts,
                                   uint64_t seed,
                                   struct MrpsState **out_state);

// # Safety
// `state` must be null or a state handle not yet freed.
void mrps_state_free(struct MrpsState *state);

// `⟨ψ|H|ψ⟩` of the problem's Hamiltonian.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_expectation(const struct MrpsProblem *problem,
                                 const struct MrpsState *state,
                                 double *out_energy);

// `|⟨a|b⟩|²`.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_fidelity(const struct MrpsState *a,
                              const struct MrpsState *b,
                              double *out_value);

// ADAPT-VQE from `reference` with `pool` (an [`MrpsPool`] value) and default
// thresholds. When `out_state` is non-null it receives the final state.
//
// # Safety
// Pointers must be valid or null.
enum MrpsStatus mrps_adapt(const struct MrpsProblem *problem,
                           const struct MrpsState *reference,
                           int32_t pool,
                           uint64_t seed,
                           struct MrpsAdaptSummary *out_summary,
                           struct MrpsState **out_state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRPS_H */
