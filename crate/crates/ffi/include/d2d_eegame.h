#ifndef D2D_EEGAME_H
#define D2D_EEGAME_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum D2dStatus {
  D2D_STATUS_OK = 0,
  D2D_STATUS_NULL_POINTER = 1,
  D2D_STATUS_INVALID_PARAMETER = 2,
  D2D_STATUS_INDEX_OUT_OF_RANGE = 3,
  D2D_STATUS_DIMENSION = 4,
  D2D_STATUS_UNDEFINED_RATIO = 5,
  D2D_STATUS_INFINITE_WATER_LEVEL = 6,
  D2D_STATUS_TOO_LARGE = 7,
  D2D_STATUS_CONFIG = 8,
  D2D_STATUS_IO = 9,
  D2D_STATUS_PANIC = 10,
} D2dStatus;

typedef enum D2dPolicy {
  D2D_POLICY_ENERGY_EFFICIENT = 0,
  D2D_POLICY_SPECTRAL_EFFICIENT = 1,
  D2D_POLICY_RANDOM = 2,
} D2dPolicy;

// Opaque network instance.
typedef struct D2dInstance D2dInstance;

// Per-device parameters in watts and bits/s/Hz.
typedef struct D2dUeParams {
  double p_max;
  double r_min;
  double p_cir;
  double eta;
} D2dUeParams;

// Result of a single-link energy-efficiency solve.
typedef struct D2dLinkResult {
  double ee;
  size_t outer_iters;
  bool feasible;
  bool converged;
} D2dLinkResult;

// Summary of a finished game; powers are written to caller buffers.
typedef struct D2dGameResult {
  size_t rounds;
  bool converged;
  size_t infeasible_players;
  double network_ee;
} D2dGameResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *d2d_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into the library on the same thread.
const char *d2d_last_error_message(void);

// Random topology of trial `trial` under the default scenario with the
// given sizes and seed.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum D2dStatus d2d_instance_generate(size_t n_d2d,
                                     size_t n_cell,
                                     uint64_t seed,
                                     uint64_t trial,
                                     struct D2dInstance **out);

// Random topology of trial `trial` under a `key = value` scenario text.
//
// # Safety
// `config` must be a NUL-terminated string; `out` must be writable.
enum D2dStatus d2d_instance_generate_from_config(const char *config,
                                                 uint64_t trial,
                                                 struct D2dInstance **out);

// Builds an instance from row-major gain arrays:
// `d2d[i*K+k]`, `cell[k]`, `cell_to_d2d[k*N+i]`,
// `d2d_cross[(j*N+i)*K+k]` (transmitter j to receiver i),
// `d2d_to_bs[i*K+k]`.
//
// # Safety
// Every array must hold the number of elements above; `ue_d2d` holds
// `n_d2d` entries and `ue_cell` holds `n_cell`; `out` must be writable.
enum D2dStatus d2d_instance_from_arrays(size_t n_d2d,
                                        size_t n_cell,
                                        const double *d2d,
                                        const double *cell,
                                        const double *cell_to_d2d,
                                        const double *d2d_cross,
                                        const double *d2d_to_bs,
                                        double noise,
                                        const struct D2dUeParams *ue_d2d,
                                        const struct D2dUeParams *ue_cell,
                                        struct D2dInstance **out);

// Releases an instance. NULL is ignored.
//
// # Safety
// `inst` must come from this library and must not be used afterwards.
void d2d_instance_free(struct D2dInstance *inst);

// Number of D2D pairs and cellular UEs (channels).
//
// # Safety
// `inst` must be a live handle; outputs must be writable.
enum D2dStatus d2d_instance_dims(const struct D2dInstance *inst, size_t *n_d2d, size_t *n_cell);

// Sum of every link's energy efficiency under the given powers
// (`d2d_powers[i*K+k]`, `cell_powers[k]`).
//
// # Safety
// Arrays must match the instance dimensions; `out` must be writable.
enum D2dStatus d2d_network_ee(const struct D2dInstance *inst,
                              const double *d2d_powers,
                              const double *cell_powers,
                              double *out);

// Energy-efficient allocation of one link over `channels` channels by
// default Dinkelbach settings. A cellular link uses one channel and
// counts its circuit power once; a D2D link counts it twice.
//
// # Safety
// `gains`, `interference` and `powers` hold `channels` elements;
// `result` must be writable.
enum D2dStatus d2d_solve_link_ee(size_t channels,
                                 const double *gains,
                                 const double *interference,
                                 double noise,
                                 struct D2dUeParams params,
                                 bool cellular,
                                 double *powers,
                                 struct D2dLinkResult *result);

// Plays sequential best responses from zero powers with the default
// update order. The final powers go to `d2d_powers[i*K+k]` and
// `cell_powers[k]`.
//
// # Safety
// Output arrays must match the instance dimensions; `result` must be
// writable.
enum D2dStatus d2d_run_game(const struct D2dInstance *inst,
                            enum D2dPolicy policy,
                            size_t max_rounds,
                            uint64_t seed,
                            double *d2d_powers,
                            double *cell_powers,
                            struct D2dGameResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* D2D_EEGAME_H */
