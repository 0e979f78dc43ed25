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

#include "dapsim/closure.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "dapsim/analysis.hpp"
#include "dapsim/error.hpp"

namespace dapsim {

namespace {

// Independent seed streams derived from the closure seed.
enum Stream : std::uint64_t { kTruth = 1, kGenerate, kTrain, kChain, kResimulate, kBaseline };

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string reference_topology_json() {
  return R"({
  "protocols": [{"name": "webdav", "overhead": 0.0}],
  "data_centers": [
    {"id": "GRIF-LPNHE", "storage_elements": [{"id": "GRIF_SE", "capacity_mb": 1e12}]},
    {"id": "CERN", "worker_nodes": [{"id": "CERN_WN", "mips": 1000, "slots": 64, "scratch_mb": 1e9}]}
  ],
  "links": [
    {"src": "GRIF_SE", "dst": "CERN_WN", "bandwidth_mbps": 10000, "bg_mu": 0, "bg_sigma": 0, "bg_update_period": 1}
  ]
})";
}

std::string reference_workload_json(std::uint64_t workload_seed) {
  nlohmann::json doc{
      {"wms_policy", "pinned"},
      {"generator",
       {{"steps", 26},
        {"period_ticks", 900},
        {"jobs_per_step", {1, 12}},
        {"threads", {1, 4}},
        {"file_mb", {300, 3000}},
        {"target_files", 106},
        {"seed", workload_seed},
        {"profile", "remote_access"},
        {"protocol", "webdav"},
        {"src", "GRIF_SE"},
        {"dst", "CERN_WN"}}}};
  return doc.dump(2);
}

SimulationProblem reference_problem(std::uint64_t workload_seed) {
  SimulationProblem p;
  p.grid = build_grid(reference_topology_json());
  p.workload = parse_workload(reference_workload_json(workload_seed));
  p.target.protocol = "webdav";
  return p;
}

ClosureRow score(const Coefficients& x_true, const Coefficients& x_sim) {
  ClosureRow row;
  row.x = x_sim;
  for (std::size_t d = 0; d < 3; ++d) {
    row.error[d] = coefficient_error(x_true[d], x_sim[d]);
    row.total += row.error[d];
  }
  return row;
}

ClosureReport run_closure(const SimulationProblem& problem, const ClosureOptions& options) {
  options.prior.validate();
  if (!options.prior.contains(options.theta_true)) throw ValidationError("closure: theta_true lies outside the prior");
  if (options.resimulations < 1) throw ValidationError("closure: resimulations must be >= 1");
  auto stage = [&](const std::string& what) {
    if (options.on_stage) options.on_stage(what);
  };

  ClosureReport report;
  report.theta_true = options.theta_true;
  stage("simulating hidden setting");
  report.x_true = simulate_coefficients(problem, options.theta_true, mix_seed(options.seed, kTruth));

  stage("generating training set");
  GenerationOptions gen;
  gen.n = options.training_tuples;
  gen.seed = mix_seed(options.seed, kGenerate);
  gen.jobs = options.jobs;
  const TrainingSet ts = generate_training_set(problem, options.prior, gen);

  stage("training classifier");
  TrainingOptions train = options.training;
  train.seed = mix_seed(options.seed, kTrain);
  const TrainedModel trained = train_classifier(ts, train);
  report.final_loss = trained.training.final_loss;

  stage("sampling posterior");
  McmcOptions mcmc = options.mcmc;
  mcmc.seed = mix_seed(options.seed, kChain);
  mcmc.theta0 = options.prior.center();
  const MarkovChain chain = mcmc_sample(trained.model, report.x_true, options.prior, mcmc);
  report.posterior = posterior_mode(chain, options.prior, options.bins);

  stage("re-simulating");
  RandomSource baseline_rng(mix_seed(options.seed, kBaseline));
  for (int k = 0; k < options.resimulations; ++k) {
    const std::uint64_t sim_seed = mix_seed(mix_seed(options.seed, kResimulate), static_cast<std::uint64_t>(k));
    if (auto x = try_simulate_coefficients(problem, report.posterior.mode, sim_seed)) {
      report.calibrated.push_back(score(report.x_true, *x));
    } else {
      ++report.degenerate_runs;
    }
    const SimulatorSetting random_theta = options.prior.sample(baseline_rng);
    if (auto x = try_simulate_coefficients(problem, random_theta, sim_seed)) {
      report.baseline.push_back(score(report.x_true, *x));
    }
  }
  if (report.calibrated.empty()) throw NumericError("closure: every re-simulation was degenerate");

  for (std::size_t d = 0; d < 3; ++d) {
    std::vector<double> e;
    for (const auto& r : report.calibrated) e.push_back(r.error[d]);
    report.median_error[d] = median_of(e);
  }
  std::vector<double> totals, baseline_totals;
  for (const auto& r : report.calibrated) totals.push_back(r.total);
  for (const auto& r : report.baseline) baseline_totals.push_back(r.total);
  report.median_total = median_of(totals);
  report.baseline_median_total = median_of(baseline_totals);
  return report;
}

std::string closure_table(const ClosureReport& report, std::size_t max_rows) {
  auto rows = report.calibrated;
  std::sort(rows.begin(), rows.end(), [](const ClosureRow& a, const ClosureRow& b) { return a.total < b.total; });
  if (rows.size() > max_rows) rows.resize(max_rows);

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %9s %-12s %9s %-12s %9s %9s\n", "a_sim", "E(a_sim)", "b_sim", "E(b_sim)",
                "c_sim", "E(c_sim)", "sum E");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12.5g %8.1f%% %-12.5g %8.1f%% %-12.5g %8.1f%% %8.1f%%\n", r.x[0],
                  100 * r.error[0], r.x[1], 100 * r.error[1], r.x[2], 100 * r.error[2], 100 * r.total);
    out << line;
  }
  std::snprintf(line, sizeof line, "true: a=%.5g b=%.5g c=%.5g\n", report.x_true[0], report.x_true[1],
                report.x_true[2]);
  out << line;
  std::snprintf(line, sizeof line, "mode: overhead=%.4g mu=%.4g sigma=%.4g (hidden %.4g, %.4g, %.4g)\n",
                report.posterior.mode.overhead, report.posterior.mode.mu, report.posterior.mode.sigma,
                report.theta_true.overhead, report.theta_true.mu, report.theta_true.sigma);
  out << line;
  std::snprintf(line, sizeof line,
                "median over %zu runs: E(a)=%.1f%% E(b)=%.1f%% E(c)=%.1f%% sum E=%.1f%% (random-setting baseline %.1f%%)\n",
                report.calibrated.size(), 100 * report.median_error[0], 100 * report.median_error[1],
                100 * report.median_error[2], 100 * report.median_total, 100 * report.baseline_median_total);
  out << line;
  return out.str();
}

std::string closure_to_json(const ClosureReport& report) {
  using nlohmann::json;
  auto setting = [](const SimulatorSetting& s) { return json{{"overhead", s.overhead}, {"mu", s.mu}, {"sigma", s.sigma}}; };
  json rows = json::array();
  for (const auto& r : report.calibrated) rows.push_back({{"x", r.x}, {"error", r.error}, {"total", r.total}});
  json doc{{"theta_true", setting(report.theta_true)},
           {"x_true", report.x_true},
           {"posterior", {{"mode", setting(report.posterior.mode)},
                          {"median", setting(report.posterior.median)},
                          {"acceptance_rate", report.posterior.acceptance_rate}}},
           {"final_loss", report.final_loss},
           {"median_error", report.median_error},
           {"median_total", report.median_total},
           {"baseline_median_total", report.baseline_median_total},
           {"degenerate_runs", report.degenerate_runs},
           {"runs", rows}};
  return doc.dump(2);
}

}  // namespace dapsim
