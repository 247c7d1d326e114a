#ifndef MFCG_H
#define MFCG_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MfcgStatus {
  MFCG_STATUS_OK = 0,
  MFCG_STATUS_NULL_POINTER = 1,
  MFCG_STATUS_INVALID_CONFIG = 2,
  MFCG_STATUS_SINGULAR_MODEL = 3,
  MFCG_STATUS_PARSE = 4,
  MFCG_STATUS_IO = 5,
  MFCG_STATUS_RUN_FAILED = 6,
  // The caller's buffer length differs from the required length.
  MFCG_STATUS_BAD_LENGTH = 7,
  MFCG_STATUS_INVALID_UTF8 = 8,
  // Results were requested before a run completed.
  MFCG_STATUS_NOT_READY = 9,
  MFCG_STATUS_PANIC = 10,
} MfcgStatus;

// Experiment configuration plus the result of its last run.
typedef struct MfcgExperiment MfcgExperiment;

// A single training run advanced episode by episode.
typedef struct MfcgTrainer MfcgTrainer;

typedef struct MfcgModelParams {
  double kappa;
  double sigma;
  double beta;
  double c1;
  double c2;
  double ct1;
  double ct2;
  double ct3;
  double ct;
} MfcgModelParams;

typedef struct MfcgSolution {
  double gamma2;
  double gamma1;
  double gamma0;
  double mu_bar;
  double var;
} MfcgSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *mfcg_last_error(void);

// Writes the baseline model constants to `out`.
//
// # Safety
// `out` must be null or valid for writes.
enum MfcgStatus mfcg_model_params_baseline(struct MfcgModelParams *out);

// Closed-form stationary equilibrium of `params`.
//
// # Safety
// `params` must be null or valid for reads, `out` null or valid for writes.
enum MfcgStatus mfcg_solve(const struct MfcgModelParams *params, struct MfcgSolution *out);

// `α̂(x) = −2Γ₂x − Γ₁`; NaN when `sol` is null.
//
// # Safety
// `sol` must be null or valid for reads.
double mfcg_optimal_control(const struct MfcgSolution *sol, double x);

// Creates an experiment from a preset name such as `"mfcg_baseline"`.
//
// # Safety
// `name` must be null or a NUL-terminated string; `out` null or valid for writes.
enum MfcgStatus mfcg_experiment_from_preset(const char *name, struct MfcgExperiment **out);

// Creates an experiment from a TOML config file.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` null or valid for writes.
enum MfcgStatus mfcg_experiment_from_file(const char *path, struct MfcgExperiment **out);

// # Safety
// `exp` must be null or a handle from this library that has not been freed.
void mfcg_experiment_free(struct MfcgExperiment *exp);

// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_set_runs(struct MfcgExperiment *exp, uintptr_t runs);

// Sets the episode count of the learner and of the exploration schedule.
//
// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_set_episodes(struct MfcgExperiment *exp, uint64_t episodes);

// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_set_seed(struct MfcgExperiment *exp, uint64_t seed);

// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_set_workers(struct MfcgExperiment *exp, uintptr_t workers);

// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_set_model(struct MfcgExperiment *exp,
                                          const struct MfcgModelParams *params);

// # Safety
// `exp` must be null or a live experiment handle; `dir` null or a
// NUL-terminated string.
enum MfcgStatus mfcg_experiment_set_output_dir(struct MfcgExperiment *exp, const char *dir);

// Runs every training. With `write_files` nonzero the standard output files
// go to the configured output directory.
//
// # Safety
// `exp` must be null or a live experiment handle.
enum MfcgStatus mfcg_experiment_run(struct MfcgExperiment *exp, int32_t write_files);

// Number of state grid points, or 0 for a null or invalid handle.
//
// # Safety
// `exp` must be null or a live experiment handle.
uintptr_t mfcg_experiment_n_states(const struct MfcgExperiment *exp);

// Analytic solution of the configured model.
//
// # Safety
// `exp` must be null or a live experiment handle; `out` null or valid for writes.
enum MfcgStatus mfcg_experiment_solution(const struct MfcgExperiment *exp,
                                         struct MfcgSolution *out);

// Learned policy averaged over the trailing window and over runs.
//
// # Safety
// `exp` must be null or a live experiment handle; `out` null or valid for
// `len` writes.
enum MfcgStatus mfcg_experiment_policy(const struct MfcgExperiment *exp,
                                       double *out,
                                       uintptr_t len);

// Learned global and local laws averaged over the trailing window and over
// runs. Either output may be null to skip it.
//
// # Safety
// `exp` must be null or a live experiment handle; non-null outputs must be
// valid for `len` writes.
enum MfcgStatus mfcg_experiment_distribution(const struct MfcgExperiment *exp,
                                             double *mu_out,
                                             double *mut_out,
                                             uintptr_t len);

// Final-episode cross-run mean of `MSE_α̂`.
//
// # Safety
// `exp` must be null or a live experiment handle; `out` null or valid for writes.
enum MfcgStatus mfcg_experiment_final_mse(const struct MfcgExperiment *exp, double *out);

// Single-run trainer for run index `run` of the experiment's config. The
// experiment handle may be freed afterwards.
//
// # Safety
// `exp` must be null or a live experiment handle; `out` null or valid for writes.
enum MfcgStatus mfcg_trainer_new(const struct MfcgExperiment *exp,
                                 uint64_t run,
                                 struct MfcgTrainer **out);

// # Safety
// `t` must be null or a trainer handle that has not been freed.
void mfcg_trainer_free(struct MfcgTrainer *t);

// Runs up to `n` more episodes, stopping early once training is finished.
// `completed` (optional) receives the number actually run.
//
// # Safety
// `t` must be null or a live trainer handle; `completed` null or valid for writes.
enum MfcgStatus mfcg_trainer_run_episodes(struct MfcgTrainer *t, uint64_t n, uint64_t *completed);

// Episodes completed so far; 0 for a null handle.
//
// # Safety
// `t` must be null or a live trainer handle.
uint64_t mfcg_trainer_episode(const struct MfcgTrainer *t);

// Current greedy policy, one action per state.
//
// # Safety
// `t` must be null or a live trainer handle; `out` null or valid for `len` writes.
enum MfcgStatus mfcg_trainer_policy(const struct MfcgTrainer *t, double *out, uintptr_t len);

// Terminal-step global and local estimates. Either output may be null.
//
// # Safety
// `t` must be null or a live trainer handle; non-null outputs must be valid
// for `len` writes.
enum MfcgStatus mfcg_trainer_distribution(const struct MfcgTrainer *t,
                                          double *mu_out,
                                          double *mut_out,
                                          uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFCG_H */
