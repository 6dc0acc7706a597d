#ifndef NDSTAB_NDSTAB_H
#define NDSTAB_NDSTAB_H

/* C interface to the delayed boundary stabilization library.
 *
 * Every function returns an ndstab_status. On failure the message is
 * available from ndstab_last_error() on the same thread until the next call.
 * Strings returned through char** are owned by the caller and released with
 * ndstab_string_free(). Handles are not shared between threads while being
 * modified; independent handles may be used concurrently. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(NDSTAB_BUILDING)
#    define NDSTAB_API __declspec(dllexport)
#  else
#    define NDSTAB_API __declspec(dllimport)
#  endif
#else
#  define NDSTAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ndstab_status {
  NDSTAB_OK = 0,
  NDSTAB_ERR_CONFIG = 1,
  NDSTAB_ERR_RANK = 2,
  NDSTAB_ERR_BLOWUP = 3,
  NDSTAB_ERR_VERIFICATION = 4,
  NDSTAB_ERR_SOLVER = 5,
  NDSTAB_ERR_ILL_CONDITIONED = 6,
  NDSTAB_ERR_INDEX = 7,
  NDSTAB_ERR_BASIS = 8,
  NDSTAB_ERR_GAMMA = 9,
  NDSTAB_ERR_CAUSALITY = 10,
  NDSTAB_ERR_IO = 11,
  NDSTAB_ERR_ARGUMENT = 12,
  NDSTAB_ERR_INTERNAL = 99
} ndstab_status;

typedef struct ndstab_config ndstab_config;
typedef struct ndstab_design ndstab_design;
typedef struct ndstab_trajectory ndstab_trajectory;

/* Run flags for ndstab_simulate. */
#define NDSTAB_RUN_OPEN_LOOP 0x1u   /* boundary input forced to zero */
#define NDSTAB_RUN_UNDELAYED 0x2u   /* u = gain . Y, no delay or predictor */

NDSTAB_API const char* ndstab_version(void);
NDSTAB_API const char* ndstab_last_error(void);
NDSTAB_API void ndstab_string_free(char* s);

/* Configuration. Keys: alpha, c, rho, tau, gammas, grid_m, dt, t_final, y0, seed. */
NDSTAB_API ndstab_status ndstab_config_new(ndstab_config** out);
NDSTAB_API ndstab_status ndstab_config_parse(const char* json_text, ndstab_config** out);
NDSTAB_API ndstab_status ndstab_config_load(const char* path, ndstab_config** out);
/* value is JSON text; a value that is not valid JSON is taken as a string. */
NDSTAB_API ndstab_status ndstab_config_set(ndstab_config* cfg, const char* key, const char* value);
NDSTAB_API ndstab_status ndstab_config_validate(const ndstab_config* cfg);
NDSTAB_API ndstab_status ndstab_config_to_json(const ndstab_config* cfg, char** json_out);
NDSTAB_API void ndstab_config_free(ndstab_config* cfg);

/* Design report for a fixture ("nonlocal-heat" or "square-counterexample";
 * NULL means nonlocal-heat). Returns NDSTAB_ERR_RANK with the report still
 * filled in when the rank condition fails. */
NDSTAB_API ndstab_status ndstab_design_report(const ndstab_config* cfg, const char* fixture, char** json_out);

/* Feedback design for the nonlocal heat equation. */
NDSTAB_API ndstab_status ndstab_design_build(const ndstab_config* cfg, ndstab_design** out);
NDSTAB_API int ndstab_design_dim(const ndstab_design* design);
/* Copies the d x d matrix row-major into out (which holds d * d doubles).
 * which: 'L' lambda, 'A', 'C'. */
NDSTAB_API ndstab_status ndstab_design_matrix(const ndstab_design* design, char which, double* out);
/* u = -sum_k <(Lambda^T + gamma_k)^{-1} A U, L> for a d-vector U. */
NDSTAB_API ndstab_status ndstab_design_feedback(const ndstab_design* design, const double* U, double* u_out);
NDSTAB_API void ndstab_design_free(ndstab_design* design);

/* Simulation. */
NDSTAB_API ndstab_status ndstab_simulate(const ndstab_config* cfg, unsigned flags, ndstab_trajectory** out);
NDSTAB_API size_t ndstab_trajectory_size(const ndstab_trajectory* traj);
NDSTAB_API int ndstab_trajectory_dim(const ndstab_trajectory* traj);
/* Y_out holds dim doubles; any output pointer may be NULL. */
NDSTAB_API ndstab_status ndstab_trajectory_sample(const ndstab_trajectory* traj, size_t i, double* t, double* norm_y,
                                                  double* u, double* Y_out);
NDSTAB_API ndstab_status ndstab_trajectory_decay_rate(const ndstab_trajectory* traj, double t_start, double* rate);
/* {"samples", "t_final", "norm_initial", "norm_final", "norm_ratio", "decay_rate"}. */
NDSTAB_API ndstab_status ndstab_trajectory_summary(const ndstab_trajectory* traj, double t_start, char** json_out);
NDSTAB_API ndstab_status ndstab_trajectory_write_csv(const ndstab_trajectory* traj, const char* path);
NDSTAB_API ndstab_status ndstab_trajectory_write_profiles(const ndstab_trajectory* traj, const char* path);
NDSTAB_API void ndstab_trajectory_free(ndstab_trajectory* traj);

/* Invariant suites: spectral, design, delay, pdesim, all. cfg may be NULL
 * for defaults. Returns NDSTAB_ERR_VERIFICATION with the report filled in
 * when a suite fails. */
NDSTAB_API ndstab_status ndstab_verify(const ndstab_config* cfg, const char* selector, char** json_out);

/* CSV table k, beta_k, lambda_2k, lambda_2k+1, C_k2, l_2k, l_2k+1. */
NDSTAB_API ndstab_status ndstab_spectrum_table(const ndstab_config* cfg, int count, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif
