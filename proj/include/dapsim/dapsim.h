/*
 * Copyright 2026 The dapsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAPSIM_DAPSIM_H
#define DAPSIM_DAPSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DAPSIM_BUILDING_LIBRARY)
#    define DAPSIM_API __declspec(dllexport)
#  else
#    define DAPSIM_API __declspec(dllimport)
#  endif
#else
#  define DAPSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure, dapsim_last_error()
 * describes the problem until the next call on the same thread. */
typedef enum dapsim_status {
  DAPSIM_OK = 0,
  DAPSIM_ERR_INVALID_ARGUMENT = 1,
  DAPSIM_ERR_VALIDATION = 2,
  DAPSIM_ERR_NUMERIC = 3,
  DAPSIM_ERR_RANK_DEFICIENT = 4,
  DAPSIM_ERR_IO = 5,
  DAPSIM_ERR_STATE = 6,
  DAPSIM_ERR_INTERNAL = 7
} dapsim_status;

DAPSIM_API const char* dapsim_version(void);
DAPSIM_API const char* dapsim_last_error(void);
DAPSIM_API const char* dapsim_status_name(dapsim_status status);
/* Releases strings returned through char** out-parameters. */
DAPSIM_API void dapsim_string_free(char* text);

/* ---- Topology, workload, setting ---------------------------------------- */

typedef struct dapsim_grid dapsim_grid;
typedef struct dapsim_workload dapsim_workload;
typedef struct dapsim_setting dapsim_setting;

DAPSIM_API dapsim_status dapsim_grid_load(const char* path, dapsim_grid** out);
DAPSIM_API dapsim_status dapsim_grid_parse(const char* json, dapsim_grid** out);
DAPSIM_API size_t dapsim_grid_link_count(const dapsim_grid* grid);
DAPSIM_API void dapsim_grid_free(dapsim_grid* grid);

DAPSIM_API dapsim_status dapsim_workload_load(const char* path, dapsim_workload** out);
DAPSIM_API dapsim_status dapsim_workload_parse(const char* json, dapsim_workload** out);
DAPSIM_API size_t dapsim_workload_file_count(const dapsim_workload* workload);
/* Replay form of the (possibly generated) workload. */
DAPSIM_API dapsim_status dapsim_workload_to_json(const dapsim_workload* workload, char** out);
DAPSIM_API void dapsim_workload_free(dapsim_workload* workload);

/* theta is (overhead, mu, sigma). */
DAPSIM_API dapsim_status dapsim_setting_load(const char* path, dapsim_setting** out);
DAPSIM_API dapsim_status dapsim_setting_parse(const char* json, dapsim_setting** out);
/* protocol may be NULL (applies to every protocol). */
DAPSIM_API dapsim_status dapsim_setting_create(const double theta[3], const char* protocol, dapsim_setting** out);
DAPSIM_API void dapsim_setting_values(const dapsim_setting* setting, double theta[3]);
DAPSIM_API void dapsim_setting_free(dapsim_setting* setting);

/* ---- Simulation ---------------------------------------------------------- */

typedef struct dapsim_result dapsim_result;
typedef struct dapsim_observations dapsim_observations;

typedef enum dapsim_profile {
  DAPSIM_PROFILE_DATA_PLACEMENT = 0,
  DAPSIM_PROFILE_STAGE_IN = 1,
  DAPSIM_PROFILE_REMOTE_ACCESS = 2
} dapsim_profile;

typedef struct dapsim_observation {
  double T;
  double S;
  double ConTh;
  double ConPr;
  int64_t start_tick;
  const char* link; /* owned by the containing handle */
  const char* job;
  dapsim_profile profile;
} dapsim_observation;

typedef struct dapsim_run_options {
  uint64_t seed;
  int64_t horizon;
  int record_events;
} dapsim_run_options;

/* setting may be NULL to run the topology's own parameters. */
DAPSIM_API dapsim_status dapsim_simulate(const dapsim_grid* grid, const dapsim_workload* workload,
                                         const dapsim_setting* setting, const dapsim_run_options* options,
                                         dapsim_result** out);
DAPSIM_API int64_t dapsim_result_end_tick(const dapsim_result* result);
DAPSIM_API int dapsim_result_truncated(const dapsim_result* result);
DAPSIM_API size_t dapsim_result_failed_jobs(const dapsim_result* result);
DAPSIM_API const dapsim_observations* dapsim_result_observations(const dapsim_result* result);
DAPSIM_API dapsim_status dapsim_result_save_events(const dapsim_result* result, const char* path);
DAPSIM_API void dapsim_result_free(dapsim_result* result);

DAPSIM_API dapsim_status dapsim_observations_load(const char* path, dapsim_observations** out);
DAPSIM_API dapsim_status dapsim_observations_save(const dapsim_observations* observations, const char* path);
DAPSIM_API size_t dapsim_observations_count(const dapsim_observations* observations);
DAPSIM_API dapsim_status dapsim_observations_get(const dapsim_observations* observations, size_t index,
                                                 dapsim_observation* out);
/* Only for handles from dapsim_observations_load. */
DAPSIM_API void dapsim_observations_free(dapsim_observations* observations);

/* ---- Analysis ------------------------------------------------------------ */

typedef struct dapsim_fit {
  double coefficients[3];
  int n_coefficients;
  double r_squared; /* uncentered */
  double f_statistic;
  int df_model;
  int df_residual;
  int n;
} dapsim_fit;

/* Least squares through the origin; X is n x p row-major, p <= 3. */
DAPSIM_API dapsim_status dapsim_ols(const double* X, const double* y, size_t n, size_t p, dapsim_fit* out);
/* model is "eq1" (S, ConTh, ConPr) or "eq2" (S, ConPr). */
DAPSIM_API dapsim_status dapsim_fit_model(const dapsim_observations* observations, const char* model, dapsim_fit* out);
DAPSIM_API dapsim_status dapsim_fit_to_json(const dapsim_fit* fit, char** out);
DAPSIM_API dapsim_status dapsim_fit_from_json(const char* json, dapsim_fit* out);
/* Fit series over consecutive start_tick windows; degenerate windows are null. */
DAPSIM_API dapsim_status dapsim_windowed_fits_json(const dapsim_observations* observations, const char* model,
                                                   int64_t window, char** out);
DAPSIM_API dapsim_status dapsim_coefficient_error(double coef_true, double coef_sim, double* out);

/* ---- Calibration --------------------------------------------------------- */

typedef struct dapsim_prior {
  double low[3];
  double high[3];
} dapsim_prior;

/* overhead (0, 0.1), mu (0, 100), sigma (0, 100). */
DAPSIM_API void dapsim_prior_default(dapsim_prior* out);

typedef struct dapsim_problem dapsim_problem;
typedef struct dapsim_training_set dapsim_training_set;
typedef struct dapsim_classifier dapsim_classifier;
typedef struct dapsim_chain dapsim_chain;

/* protocol may be NULL (setting applies to every protocol). */
DAPSIM_API dapsim_status dapsim_problem_create(const dapsim_grid* grid, const dapsim_workload* workload,
                                               const char* protocol, int64_t horizon, dapsim_problem** out);
/* Built-in single-link production campaign. */
DAPSIM_API dapsim_status dapsim_problem_reference(uint64_t workload_seed, dapsim_problem** out);
DAPSIM_API dapsim_status dapsim_simulate_coefficients(const dapsim_problem* problem, const double theta[3],
                                                      uint64_t seed, double x_out[3]);
DAPSIM_API void dapsim_problem_free(dapsim_problem* problem);

typedef void (*dapsim_progress_fn)(size_t done, size_t total, void* user);

DAPSIM_API dapsim_status dapsim_training_generate(const dapsim_problem* problem, const dapsim_prior* prior, size_t n,
                                                  uint64_t seed, int jobs, dapsim_progress_fn progress, void* user,
                                                  dapsim_training_set** out);
DAPSIM_API dapsim_status dapsim_training_save(const dapsim_training_set* set, const char* path);
DAPSIM_API dapsim_status dapsim_training_load(const char* path, const dapsim_prior* prior, dapsim_training_set** out);
DAPSIM_API size_t dapsim_training_size(const dapsim_training_set* set);
DAPSIM_API void dapsim_training_free(dapsim_training_set* set);

typedef struct dapsim_train_options {
  int epochs;
  double learning_rate;
  int batch_size;
  uint64_t seed;
} dapsim_train_options;

/* Desk-scale defaults: 30 epochs, learning rate 1e-4, 64 tuples per batch. */
DAPSIM_API void dapsim_train_options_default(dapsim_train_options* out);

typedef void (*dapsim_epoch_fn)(int epoch, double loss, void* user);

DAPSIM_API dapsim_status dapsim_classifier_train(const dapsim_training_set* set, const dapsim_train_options* options,
                                                 dapsim_epoch_fn on_epoch, void* user, dapsim_classifier** out,
                                                 double* final_loss);
DAPSIM_API dapsim_status dapsim_classifier_save(const dapsim_classifier* clf, const char* path);
DAPSIM_API dapsim_status dapsim_classifier_load(const char* path, dapsim_classifier** out);
/* log(d / (1 - d)) for raw (unnormalized) x and theta. */
DAPSIM_API dapsim_status dapsim_classifier_log_odds(const dapsim_classifier* clf, const double x[3],
                                                    const double theta[3], double* out);
DAPSIM_API void dapsim_classifier_free(dapsim_classifier* clf);

typedef struct dapsim_mcmc_options {
  size_t burn_in;
  size_t samples;
  int has_theta0; /* otherwise the prior centre */
  double theta0[3];
  int has_scales; /* otherwise 5% of each prior range */
  double scales[3];
  uint64_t seed;
} dapsim_mcmc_options;

/* 2,000 burn-in states, 20,000 samples. */
DAPSIM_API void dapsim_mcmc_options_default(dapsim_mcmc_options* out);
DAPSIM_API dapsim_status dapsim_mcmc_sample(const dapsim_classifier* clf, const double x_true[3],
                                            const dapsim_prior* prior, const dapsim_mcmc_options* options,
                                            dapsim_chain** out);
DAPSIM_API dapsim_status dapsim_chain_save(const dapsim_chain* chain, const char* path);
DAPSIM_API dapsim_status dapsim_chain_load(const char* path, dapsim_chain** out);
DAPSIM_API size_t dapsim_chain_size(const dapsim_chain* chain);
DAPSIM_API double dapsim_chain_acceptance_rate(const dapsim_chain* chain);
DAPSIM_API void dapsim_chain_free(dapsim_chain* chain);

typedef struct dapsim_posterior {
  double mode[3];
  double median[3];
  double acceptance_rate;
} dapsim_posterior;

DAPSIM_API dapsim_status dapsim_posterior_summarize(const dapsim_chain* chain, const dapsim_prior* prior, int bins,
                                                    dapsim_posterior* out);
DAPSIM_API dapsim_status dapsim_posterior_to_json(const dapsim_posterior* posterior, char** out);

/* ---- Closure experiment -------------------------------------------------- */

typedef struct dapsim_closure_report dapsim_closure_report;

typedef struct dapsim_closure_options {
  double theta_true[3];
  size_t training_tuples;
  int jobs;
  dapsim_train_options training;
  size_t burn_in;
  size_t samples;
  int bins;
  int resimulations;
  uint64_t seed;
} dapsim_closure_options;

typedef void (*dapsim_stage_fn)(const char* stage, void* user);

/* theta_true (0.02, 36.9, 14.4), 50,000 tuples, 100 re-simulations. */
DAPSIM_API void dapsim_closure_options_default(dapsim_closure_options* out);
DAPSIM_API dapsim_status dapsim_closure_run(const dapsim_problem* problem, const dapsim_prior* prior,
                                            const dapsim_closure_options* options, dapsim_stage_fn on_stage,
                                            void* user, dapsim_closure_report** out);
/* Median per-coefficient errors, their summed median, and the median summed
 * error of the random-setting baseline. */
DAPSIM_API void dapsim_closure_medians(const dapsim_closure_report* report, double errors[3], double* total,
                                       double* baseline_total);
DAPSIM_API void dapsim_closure_mode(const dapsim_closure_report* report, double theta[3]);
DAPSIM_API dapsim_status dapsim_closure_table(const dapsim_closure_report* report, size_t max_rows, char** out);
DAPSIM_API dapsim_status dapsim_closure_to_json(const dapsim_closure_report* report, char** out);
DAPSIM_API void dapsim_closure_free(dapsim_closure_report* report);

#ifdef __cplusplus
}
#endif

#endif /* DAPSIM_DAPSIM_H */
