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

#include "dapsim/dapsim.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "dapsim/analysis.hpp"
#include "dapsim/calibration.hpp"
#include "dapsim/closure.hpp"
#include "dapsim/error.hpp"
#include "dapsim/grid_model.hpp"
#include "dapsim/sim_engine.hpp"
#include "dapsim/workload.hpp"

#ifndef DAPSIM_VERSION_STRING
#define DAPSIM_VERSION_STRING "0.0.0"
#endif

struct dapsim_grid {
  dapsim::Grid grid;
};
struct dapsim_workload {
  dapsim::Workload workload;
};
struct dapsim_setting {
  dapsim::SettingSpec spec;
};
struct dapsim_observations {
  std::vector<dapsim::Observation> rows;
};
struct dapsim_result {
  dapsim::SimulationResult result;
  dapsim_observations observations;
};
struct dapsim_problem {
  dapsim::SimulationProblem problem;
};
struct dapsim_training_set {
  dapsim::TrainingSet set;
};
struct dapsim_classifier {
  dapsim::ClassifierRatioModel model;
};
struct dapsim_chain {
  dapsim::MarkovChain chain;
};
struct dapsim_closure_report {
  dapsim::ClosureReport report;
};

namespace {

thread_local std::string g_last_error;

dapsim_status status_of(dapsim::ErrorKind kind) {
  switch (kind) {
    case dapsim::ErrorKind::validation: return DAPSIM_ERR_VALIDATION;
    case dapsim::ErrorKind::numeric: return DAPSIM_ERR_NUMERIC;
    case dapsim::ErrorKind::rank_deficient: return DAPSIM_ERR_RANK_DEFICIENT;
    case dapsim::ErrorKind::io: return DAPSIM_ERR_IO;
    case dapsim::ErrorKind::state: return DAPSIM_ERR_STATE;
    case dapsim::ErrorKind::internal: return DAPSIM_ERR_INTERNAL;
  }
  return DAPSIM_ERR_INTERNAL;
}

dapsim_status fail(dapsim_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
dapsim_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return DAPSIM_OK;
  } catch (const dapsim::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(DAPSIM_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DAPSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DAPSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DAPSIM_ERR_INTERNAL, "unknown error");
  }
}

#define DAPSIM_REQUIRE(cond, what)                                          \
  do {                                                                      \
    if (!(cond)) return fail(DAPSIM_ERR_INVALID_ARGUMENT, (what));          \
  } while (0)

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dapsim::PriorBox to_prior(const dapsim_prior* p) {
  dapsim::PriorBox box;
  for (int d = 0; d < 3; ++d) {
    box.low[static_cast<std::size_t>(d)] = p->low[d];
    box.high[static_cast<std::size_t>(d)] = p->high[d];
  }
  box.validate();
  return box;
}

dapsim::SimulatorSetting to_setting(const double v[3]) { return {v[0], v[1], v[2]}; }

void from_setting(const dapsim::SimulatorSetting& s, double out[3]) {
  out[0] = s.overhead;
  out[1] = s.mu;
  out[2] = s.sigma;
}

dapsim::TrainingOptions to_training(const dapsim_train_options* o) {
  dapsim::TrainingOptions t;
  t.epochs = o->epochs;
  t.learning_rate = o->learning_rate;
  t.batch_size = o->batch_size;
  t.seed = o->seed;
  return t;
}

void fill_fit(const dapsim::RegressionFit& fit, dapsim_fit* out) {
  *out = dapsim_fit{};
  out->n_coefficients = static_cast<int>(fit.coefficients.size());
  for (std::size_t i = 0; i < fit.coefficients.size() && i < 3; ++i) out->coefficients[i] = fit.coefficients[i];
  out->r_squared = fit.r_squared;
  out->f_statistic = fit.f_statistic;
  out->df_model = fit.df_model;
  out->df_residual = fit.df_residual;
  out->n = fit.n;
}

dapsim::RegressionFit to_fit(const dapsim_fit* f) {
  dapsim::RegressionFit fit;
  fit.coefficients.assign(f->coefficients, f->coefficients + f->n_coefficients);
  fit.r_squared = f->r_squared;
  fit.f_statistic = f->f_statistic;
  fit.df_model = f->df_model;
  fit.df_residual = f->df_residual;
  fit.n = f->n;
  return fit;
}

}  // namespace

extern "C" {

const char* dapsim_version(void) { return DAPSIM_VERSION_STRING; }

const char* dapsim_last_error(void) { return g_last_error.c_str(); }

const char* dapsim_status_name(dapsim_status status) {
  switch (status) {
    case DAPSIM_OK: return "ok";
    case DAPSIM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DAPSIM_ERR_VALIDATION: return "validation";
    case DAPSIM_ERR_NUMERIC: return "numeric";
    case DAPSIM_ERR_RANK_DEFICIENT: return "rank_deficient";
    case DAPSIM_ERR_IO: return "io";
    case DAPSIM_ERR_STATE: return "state";
    case DAPSIM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void dapsim_string_free(char* text) { std::free(text); }

// ---- Topology, workload, setting ---------------------------------------------

dapsim_status dapsim_grid_load(const char* path, dapsim_grid** out) {
  DAPSIM_REQUIRE(path && out, "grid_load: null argument");
  return guarded([&] { *out = new dapsim_grid{dapsim::load_grid(path)}; });
}

dapsim_status dapsim_grid_parse(const char* json, dapsim_grid** out) {
  DAPSIM_REQUIRE(json && out, "grid_parse: null argument");
  return guarded([&] { *out = new dapsim_grid{dapsim::build_grid(json)}; });
}

size_t dapsim_grid_link_count(const dapsim_grid* grid) { return grid ? grid->grid.links().size() : 0; }

void dapsim_grid_free(dapsim_grid* grid) { delete grid; }

dapsim_status dapsim_workload_load(const char* path, dapsim_workload** out) {
  DAPSIM_REQUIRE(path && out, "workload_load: null argument");
  return guarded([&] { *out = new dapsim_workload{dapsim::load_workload(path)}; });
}

dapsim_status dapsim_workload_parse(const char* json, dapsim_workload** out) {
  DAPSIM_REQUIRE(json && out, "workload_parse: null argument");
  return guarded([&] { *out = new dapsim_workload{dapsim::parse_workload(json)}; });
}

size_t dapsim_workload_file_count(const dapsim_workload* workload) {
  return workload ? workload->workload.file_count() : 0;
}

dapsim_status dapsim_workload_to_json(const dapsim_workload* workload, char** out) {
  DAPSIM_REQUIRE(workload && out, "workload_to_json: null argument");
  return guarded([&] { *out = copy_string(dapsim::workload_to_json(workload->workload)); });
}

void dapsim_workload_free(dapsim_workload* workload) { delete workload; }

dapsim_status dapsim_setting_load(const char* path, dapsim_setting** out) {
  DAPSIM_REQUIRE(path && out, "setting_load: null argument");
  return guarded([&] { *out = new dapsim_setting{dapsim::load_setting(path)}; });
}

dapsim_status dapsim_setting_parse(const char* json, dapsim_setting** out) {
  DAPSIM_REQUIRE(json && out, "setting_parse: null argument");
  return guarded([&] { *out = new dapsim_setting{dapsim::parse_setting(json)}; });
}

dapsim_status dapsim_setting_create(const double theta[3], const char* protocol, dapsim_setting** out) {
  DAPSIM_REQUIRE(theta && out, "setting_create: null argument");
  return guarded([&] {
    dapsim::SettingSpec spec;
    spec.theta = to_setting(theta);
    if (protocol != nullptr) spec.target.protocol = protocol;
    // Round-trip through the parser so the same validation applies.
    *out = new dapsim_setting{dapsim::parse_setting(dapsim::setting_to_json(spec))};
  });
}

void dapsim_setting_values(const dapsim_setting* setting, double theta[3]) {
  if (setting && theta) from_setting(setting->spec.theta, theta);
}

void dapsim_setting_free(dapsim_setting* setting) { delete setting; }

// ---- Simulation -----------------------------------------------------------------

dapsim_status dapsim_simulate(const dapsim_grid* grid, const dapsim_workload* workload, const dapsim_setting* setting,
                              const dapsim_run_options* options, dapsim_result** out) {
  DAPSIM_REQUIRE(grid && workload && options && out, "simulate: null argument");
  return guarded([&] {
    std::optional<dapsim::SettingSpec> spec;
    if (setting != nullptr) spec = setting->spec;
    dapsim::RunOptions run{options->seed, options->horizon, options->record_events != 0};
    auto* r = new dapsim_result{dapsim::run(grid->grid, workload->workload, spec, run), {}};
    r->observations.rows = r->result.observations;
    *out = r;
  });
}

int64_t dapsim_result_end_tick(const dapsim_result* result) { return result ? result->result.end_tick : 0; }

int dapsim_result_truncated(const dapsim_result* result) { return result && result->result.truncated ? 1 : 0; }

size_t dapsim_result_failed_jobs(const dapsim_result* result) {
  if (!result) return 0;
  size_t n = 0;
  for (const auto& j : result->result.jobs) n += j.state == dapsim::JobState::failed ? 1 : 0;
  return n;
}

const dapsim_observations* dapsim_result_observations(const dapsim_result* result) {
  return result ? &result->observations : nullptr;
}

dapsim_status dapsim_result_save_events(const dapsim_result* result, const char* path) {
  DAPSIM_REQUIRE(result && path, "save_events: null argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dapsim::IoError(std::string("cannot write '") + path + "'");
    dapsim::write_event_log(out, result->result.events);
  });
}

void dapsim_result_free(dapsim_result* result) { delete result; }

dapsim_status dapsim_observations_load(const char* path, dapsim_observations** out) {
  DAPSIM_REQUIRE(path && out, "observations_load: null argument");
  return guarded([&] { *out = new dapsim_observations{dapsim::load_observations_csv(path)}; });
}

dapsim_status dapsim_observations_save(const dapsim_observations* observations, const char* path) {
  DAPSIM_REQUIRE(observations && path, "observations_save: null argument");
  return guarded([&] { dapsim::save_observations_csv(path, observations->rows); });
}

size_t dapsim_observations_count(const dapsim_observations* observations) {
  return observations ? observations->rows.size() : 0;
}

dapsim_status dapsim_observations_get(const dapsim_observations* observations, size_t index, dapsim_observation* out) {
  DAPSIM_REQUIRE(observations && out, "observations_get: null argument");
  DAPSIM_REQUIRE(index < observations->rows.size(), "observations_get: index out of range");
  const auto& o = observations->rows[index];
  *out = dapsim_observation{o.T, o.S, o.ConTh, o.ConPr, o.start_tick, o.link.c_str(), o.job.c_str(),
                            static_cast<dapsim_profile>(o.profile)};
  return DAPSIM_OK;
}

void dapsim_observations_free(dapsim_observations* observations) { delete observations; }

// ---- Analysis -------------------------------------------------------------------

dapsim_status dapsim_ols(const double* X, const double* y, size_t n, size_t p, dapsim_fit* out) {
  DAPSIM_REQUIRE(X && y && out, "ols: null argument");
  DAPSIM_REQUIRE(p >= 1 && p <= 3, "ols: p must be 1, 2 or 3");
  return guarded([&] {
    Eigen::MatrixXd Xm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::VectorXd ym(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      ym(static_cast<Eigen::Index>(i)) = y[i];
      for (size_t j = 0; j < p; ++j) Xm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X[i * p + j];
    }
    fill_fit(dapsim::fit_origin_ols(Xm, ym), out);
  });
}

dapsim_status dapsim_fit_model(const dapsim_observations* observations, const char* model, dapsim_fit* out) {
  DAPSIM_REQUIRE(observations && model && out, "fit_model: null argument");
  return guarded([&] { fill_fit(dapsim::fit_model(dapsim::parse_throughput_model(model), observations->rows), out); });
}

dapsim_status dapsim_fit_to_json(const dapsim_fit* fit, char** out) {
  DAPSIM_REQUIRE(fit && out, "fit_to_json: null argument");
  DAPSIM_REQUIRE(fit->n_coefficients >= 0 && fit->n_coefficients <= 3, "fit_to_json: bad coefficient count");
  return guarded([&] { *out = copy_string(dapsim::fit_to_json(to_fit(fit))); });
}

dapsim_status dapsim_fit_from_json(const char* json, dapsim_fit* out) {
  DAPSIM_REQUIRE(json && out, "fit_from_json: null argument");
  return guarded([&] {
    const auto doc = nlohmann::json::parse(json);
    if (!doc.is_object() || !doc.contains("coefficients") || !doc["coefficients"].is_array()) {
      throw dapsim::ValidationError("fit document needs a 'coefficients' array");
    }
    const auto coefficients = doc["coefficients"].get<std::vector<double>>();
    if (coefficients.empty() || coefficients.size() > 3) throw dapsim::ValidationError("fit document: 1 to 3 coefficients expected");
    dapsim::RegressionFit fit;
    fit.coefficients = coefficients;
    fit.r_squared = doc.value("r_squared", 0.0);
    const auto f = doc.value("f_statistic", nlohmann::json(0.0));
    fit.f_statistic = f.is_number() ? f.get<double>() : std::numeric_limits<double>::infinity();
    fit.df_model = doc.value("df_model", static_cast<int>(coefficients.size()));
    fit.df_residual = doc.value("df_residual", 0);
    fit.n = doc.value("n", 0);
    fill_fit(fit, out);
  });
}

dapsim_status dapsim_windowed_fits_json(const dapsim_observations* observations, const char* model, int64_t window,
                                        char** out) {
  DAPSIM_REQUIRE(observations && model && out, "windowed_fits: null argument");
  return guarded([&] {
    const auto series = dapsim::windowed_fits(observations->rows, window, dapsim::parse_throughput_model(model));
    *out = copy_string(dapsim::fit_series_to_json(series));
  });
}

dapsim_status dapsim_coefficient_error(double coef_true, double coef_sim, double* out) {
  DAPSIM_REQUIRE(out, "coefficient_error: null argument");
  return guarded([&] { *out = dapsim::coefficient_error(coef_true, coef_sim); });
}

// ---- Calibration ----------------------------------------------------------------

void dapsim_prior_default(dapsim_prior* out) {
  if (!out) return;
  const dapsim::PriorBox box;
  for (int d = 0; d < 3; ++d) {
    out->low[d] = box.low[static_cast<std::size_t>(d)];
    out->high[d] = box.high[static_cast<std::size_t>(d)];
  }
}

dapsim_status dapsim_problem_create(const dapsim_grid* grid, const dapsim_workload* workload, const char* protocol,
                                    int64_t horizon, dapsim_problem** out) {
  DAPSIM_REQUIRE(grid && workload && out, "problem_create: null argument");
  DAPSIM_REQUIRE(horizon >= 1, "problem_create: horizon must be >= 1");
  return guarded([&] {
    auto* p = new dapsim_problem{};
    p->problem.grid = grid->grid;
    p->problem.workload = workload->workload;
    if (protocol != nullptr) p->problem.target.protocol = protocol;
    p->problem.horizon = horizon;
    *out = p;
  });
}

dapsim_status dapsim_problem_reference(uint64_t workload_seed, dapsim_problem** out) {
  DAPSIM_REQUIRE(out, "problem_reference: null argument");
  return guarded([&] { *out = new dapsim_problem{dapsim::reference_problem(workload_seed)}; });
}

dapsim_status dapsim_simulate_coefficients(const dapsim_problem* problem, const double theta[3], uint64_t seed,
                                           double x_out[3]) {
  DAPSIM_REQUIRE(problem && theta && x_out, "simulate_coefficients: null argument");
  return guarded([&] {
    const auto x = dapsim::simulate_coefficients(problem->problem, to_setting(theta), seed);
    for (int d = 0; d < 3; ++d) x_out[d] = x[static_cast<std::size_t>(d)];
  });
}

void dapsim_problem_free(dapsim_problem* problem) { delete problem; }

dapsim_status dapsim_training_generate(const dapsim_problem* problem, const dapsim_prior* prior, size_t n,
                                       uint64_t seed, int jobs, dapsim_progress_fn progress, void* user,
                                       dapsim_training_set** out) {
  DAPSIM_REQUIRE(problem && prior && out, "training_generate: null argument");
  DAPSIM_REQUIRE(n >= 1, "training_generate: n must be >= 1");
  DAPSIM_REQUIRE(jobs >= 1, "training_generate: jobs must be >= 1");
  return guarded([&] {
    dapsim::GenerationOptions options;
    options.n = n;
    options.seed = seed;
    options.jobs = jobs;
    if (progress != nullptr) options.on_progress = [=](std::size_t done) { progress(done, n, user); };
    *out = new dapsim_training_set{dapsim::generate_training_set(problem->problem, to_prior(prior), options)};
  });
}

dapsim_status dapsim_training_save(const dapsim_training_set* set, const char* path) {
  DAPSIM_REQUIRE(set && path, "training_save: null argument");
  return guarded([&] { dapsim::save_training_set(path, set->set); });
}

dapsim_status dapsim_training_load(const char* path, const dapsim_prior* prior, dapsim_training_set** out) {
  DAPSIM_REQUIRE(path && prior && out, "training_load: null argument");
  return guarded([&] { *out = new dapsim_training_set{dapsim::load_training_set(path, to_prior(prior))}; });
}

size_t dapsim_training_size(const dapsim_training_set* set) { return set ? set->set.size() : 0; }

void dapsim_training_free(dapsim_training_set* set) { delete set; }

void dapsim_train_options_default(dapsim_train_options* out) {
  if (!out) return;
  const dapsim::TrainingOptions defaults;
  *out = dapsim_train_options{defaults.epochs, defaults.learning_rate, defaults.batch_size, defaults.seed};
}

dapsim_status dapsim_classifier_train(const dapsim_training_set* set, const dapsim_train_options* options,
                                      dapsim_epoch_fn on_epoch, void* user, dapsim_classifier** out,
                                      double* final_loss) {
  DAPSIM_REQUIRE(set && options && out, "classifier_train: null argument");
  DAPSIM_REQUIRE(options->epochs >= 1 && options->batch_size >= 1 && options->learning_rate > 0.0,
                 "classifier_train: epochs, batch_size and learning_rate must be positive");
  return guarded([&] {
    auto training = to_training(options);
    if (on_epoch != nullptr) training.on_epoch = [=](int epoch, double loss) { on_epoch(epoch, loss, user); };
    auto trained = dapsim::train_classifier(set->set, training);
    if (final_loss != nullptr) *final_loss = trained.training.final_loss;
    *out = new dapsim_classifier{std::move(trained.model)};
  });
}

dapsim_status dapsim_classifier_save(const dapsim_classifier* clf, const char* path) {
  DAPSIM_REQUIRE(clf && path, "classifier_save: null argument");
  return guarded([&] { clf->model.save(path); });
}

dapsim_status dapsim_classifier_load(const char* path, dapsim_classifier** out) {
  DAPSIM_REQUIRE(path && out, "classifier_load: null argument");
  return guarded([&] { *out = new dapsim_classifier{dapsim::ClassifierRatioModel::load(path)}; });
}

dapsim_status dapsim_classifier_log_odds(const dapsim_classifier* clf, const double x[3], const double theta[3],
                                         double* out) {
  DAPSIM_REQUIRE(clf && x && theta && out, "classifier_log_odds: null argument");
  return guarded([&] { *out = clf->model.log_odds({x[0], x[1], x[2]}, to_setting(theta)); });
}

void dapsim_classifier_free(dapsim_classifier* clf) { delete clf; }

void dapsim_mcmc_options_default(dapsim_mcmc_options* out) {
  if (!out) return;
  const dapsim::McmcOptions defaults;
  *out = dapsim_mcmc_options{};
  out->burn_in = defaults.burn_in;
  out->samples = defaults.samples;
  out->seed = defaults.seed;
}

dapsim_status dapsim_mcmc_sample(const dapsim_classifier* clf, const double x_true[3], const dapsim_prior* prior,
                                 const dapsim_mcmc_options* options, dapsim_chain** out) {
  DAPSIM_REQUIRE(clf && x_true && prior && options && out, "mcmc_sample: null argument");
  DAPSIM_REQUIRE(options->samples >= 1, "mcmc_sample: samples must be >= 1");
  return guarded([&] {
    dapsim::McmcOptions mcmc;
    mcmc.burn_in = options->burn_in;
    mcmc.samples = options->samples;
    mcmc.seed = options->seed;
    if (options->has_theta0) mcmc.theta0 = to_setting(options->theta0);
    if (options->has_scales) mcmc.proposal_scales = std::array<double, 3>{options->scales[0], options->scales[1], options->scales[2]};
    *out = new dapsim_chain{dapsim::mcmc_sample(clf->model, {x_true[0], x_true[1], x_true[2]}, to_prior(prior), mcmc)};
  });
}

dapsim_status dapsim_chain_save(const dapsim_chain* chain, const char* path) {
  DAPSIM_REQUIRE(chain && path, "chain_save: null argument");
  return guarded([&] { dapsim::save_chain(path, chain->chain); });
}

dapsim_status dapsim_chain_load(const char* path, dapsim_chain** out) {
  DAPSIM_REQUIRE(path && out, "chain_load: null argument");
  return guarded([&] { *out = new dapsim_chain{dapsim::load_chain(path)}; });
}

size_t dapsim_chain_size(const dapsim_chain* chain) { return chain ? chain->chain.states.size() : 0; }

double dapsim_chain_acceptance_rate(const dapsim_chain* chain) { return chain ? chain->chain.acceptance_rate : 0.0; }

void dapsim_chain_free(dapsim_chain* chain) { delete chain; }

dapsim_status dapsim_posterior_summarize(const dapsim_chain* chain, const dapsim_prior* prior, int bins,
                                         dapsim_posterior* out) {
  DAPSIM_REQUIRE(chain && prior && out, "posterior_summarize: null argument");
  return guarded([&] {
    const auto s = dapsim::posterior_mode(chain->chain, to_prior(prior), bins);
    from_setting(s.mode, out->mode);
    from_setting(s.median, out->median);
    out->acceptance_rate = s.acceptance_rate;
  });
}

dapsim_status dapsim_posterior_to_json(const dapsim_posterior* posterior, char** out) {
  DAPSIM_REQUIRE(posterior && out, "posterior_to_json: null argument");
  return guarded([&] {
    dapsim::PosteriorSummary s{to_setting(posterior->mode), to_setting(posterior->median), posterior->acceptance_rate};
    *out = copy_string(dapsim::summary_to_json(s));
  });
}

// ---- Closure --------------------------------------------------------------------

void dapsim_closure_options_default(dapsim_closure_options* out) {
  if (!out) return;
  const dapsim::ClosureOptions defaults;
  *out = dapsim_closure_options{};
  from_setting(defaults.theta_true, out->theta_true);
  out->training_tuples = defaults.training_tuples;
  out->jobs = defaults.jobs;
  dapsim_train_options_default(&out->training);
  out->burn_in = defaults.mcmc.burn_in;
  out->samples = defaults.mcmc.samples;
  out->bins = defaults.bins;
  out->resimulations = defaults.resimulations;
  out->seed = defaults.seed;
}

dapsim_status dapsim_closure_run(const dapsim_problem* problem, const dapsim_prior* prior,
                                 const dapsim_closure_options* options, dapsim_stage_fn on_stage, void* user,
                                 dapsim_closure_report** out) {
  DAPSIM_REQUIRE(problem && prior && options && out, "closure_run: null argument");
  DAPSIM_REQUIRE(options->training_tuples >= 1 && options->jobs >= 1 && options->samples >= 1 &&
                     options->resimulations >= 1 && options->bins >= 2,
                 "closure_run: budgets must be positive");
  return guarded([&] {
    dapsim::ClosureOptions c;
    c.theta_true = to_setting(options->theta_true);
    c.prior = to_prior(prior);
    c.training_tuples = options->training_tuples;
    c.jobs = options->jobs;
    c.training = to_training(&options->training);
    c.mcmc.burn_in = options->burn_in;
    c.mcmc.samples = options->samples;
    c.bins = options->bins;
    c.resimulations = options->resimulations;
    c.seed = options->seed;
    if (on_stage != nullptr) c.on_stage = [=](const std::string& s) { on_stage(s.c_str(), user); };
    *out = new dapsim_closure_report{dapsim::run_closure(problem->problem, c)};
  });
}

void dapsim_closure_medians(const dapsim_closure_report* report, double errors[3], double* total,
                            double* baseline_total) {
  if (!report) return;
  if (errors) {
    for (int d = 0; d < 3; ++d) errors[d] = report->report.median_error[static_cast<std::size_t>(d)];
  }
  if (total) *total = report->report.median_total;
  if (baseline_total) *baseline_total = report->report.baseline_median_total;
}

void dapsim_closure_mode(const dapsim_closure_report* report, double theta[3]) {
  if (report && theta) from_setting(report->report.posterior.mode, theta);
}

dapsim_status dapsim_closure_table(const dapsim_closure_report* report, size_t max_rows, char** out) {
  DAPSIM_REQUIRE(report && out, "closure_table: null argument");
  return guarded([&] { *out = copy_string(dapsim::closure_table(report->report, max_rows)); });
}

dapsim_status dapsim_closure_to_json(const dapsim_closure_report* report, char** out) {
  DAPSIM_REQUIRE(report && out, "closure_to_json: null argument");
  return guarded([&] { *out = copy_string(dapsim::closure_to_json(report->report)); });
}

void dapsim_closure_free(dapsim_closure_report* report) { delete report; }

}  // extern "C"
