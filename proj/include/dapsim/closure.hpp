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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dapsim/calibration.hpp"

namespace dapsim {

/// Topology of the self-calibration experiment: one storage element streaming
/// to one worker node over a 10 Gbps WebDAV link.
std::string reference_topology_json();
/// Production-shaped campaign on that topology: 26 steps at a 900-tick
/// cadence, 1-12 jobs per step, up to 4 threads, 300-3000 MB files, 106 files.
std::string reference_workload_json(std::uint64_t workload_seed = 7);
SimulationProblem reference_problem(std::uint64_t workload_seed = 7);

struct ClosureOptions {
  SimulatorSetting theta_true{0.02, 36.9, 14.4};
  PriorBox prior;
  std::size_t training_tuples = 50'000;
  int jobs = 1;
  TrainingOptions training;
  McmcOptions mcmc;  // seed and theta0 are overridden
  int bins = 50;
  int resimulations = 100;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> on_stage;
};

struct ClosureRow {
  Coefficients x{};
  Coefficients error{};
  double total = 0.0;
};

struct ClosureReport {
  SimulatorSetting theta_true;
  Coefficients x_true{};
  PosteriorSummary posterior;
  double final_loss = 0.0;
  std::vector<ClosureRow> calibrated;  // re-simulations under the posterior mode
  std::vector<ClosureRow> baseline;    // simulations under settings drawn from the prior
  Coefficients median_error{};
  double median_total = 0.0;
  double baseline_median_total = 0.0;
  std::size_t degenerate_runs = 0;
};

/// Hides theta_true, calibrates against its simulated coefficients, then
/// re-simulates under the recovered setting and scores each coefficient.
ClosureReport run_closure(const SimulationProblem& problem, const ClosureOptions& options);

ClosureRow score(const Coefficients& x_true, const Coefficients& x_sim);

/// Plain-text table with columns a_sim, E(a_sim), b_sim, E(b_sim), c_sim,
/// E(c_sim), sum E; rows sorted by sum E and limited to `max_rows`.
std::string closure_table(const ClosureReport& report, std::size_t max_rows = 10);
std::string closure_to_json(const ClosureReport& report);

}  // namespace dapsim
