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

// dapsim command-line front end. Talks to the simulator exclusively through
// the C API in <dapsim/dapsim.h>.

#include <dapsim/dapsim.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- Error plumbing ------------------------------------------------------------

struct CliError {
  int exit_code;
  std::string kind;
  std::string message;
};

int exit_code_for(dapsim_status status) {
  switch (status) {
    case DAPSIM_OK: return 0;
    case DAPSIM_ERR_INVALID_ARGUMENT:
    case DAPSIM_ERR_VALIDATION:
    case DAPSIM_ERR_RANK_DEFICIENT:
    case DAPSIM_ERR_STATE: return 2;
    default: return 3;
  }
}

void check(dapsim_status status) {
  if (status != DAPSIM_OK) throw CliError{exit_code_for(status), dapsim_status_name(status), dapsim_last_error()};
}

[[noreturn]] void validation_error(const std::string& message) { throw CliError{2, "validation", message}; }

[[noreturn]] void state_error(const std::string& message) { throw CliError{2, "state", message}; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

int report(const CliError& e) {
  std::cerr << "error kind=" << e.kind << " message=\"" << escape(e.message) << "\"\n";
  return e.exit_code;
}

// ---- Handle ownership ------------------------------------------------------------

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Grid = std::unique_ptr<dapsim_grid, Deleter<dapsim_grid, dapsim_grid_free>>;
using Workload = std::unique_ptr<dapsim_workload, Deleter<dapsim_workload, dapsim_workload_free>>;
using Setting = std::unique_ptr<dapsim_setting, Deleter<dapsim_setting, dapsim_setting_free>>;
using Result = std::unique_ptr<dapsim_result, Deleter<dapsim_result, dapsim_result_free>>;
using Observations = std::unique_ptr<dapsim_observations, Deleter<dapsim_observations, dapsim_observations_free>>;
using Problem = std::unique_ptr<dapsim_problem, Deleter<dapsim_problem, dapsim_problem_free>>;
using TrainingSet = std::unique_ptr<dapsim_training_set, Deleter<dapsim_training_set, dapsim_training_free>>;
using Classifier = std::unique_ptr<dapsim_classifier, Deleter<dapsim_classifier, dapsim_classifier_free>>;
using Chain = std::unique_ptr<dapsim_chain, Deleter<dapsim_chain, dapsim_chain_free>>;
using Closure = std::unique_ptr<dapsim_closure_report, Deleter<dapsim_closure_report, dapsim_closure_free>>;

std::string take_string(char* raw) {
  std::string s(raw);
  dapsim_string_free(raw);
  return s;
}

// ---- Files and manifest ------------------------------------------------------------

void require_input(const std::string& path, const std::string& flag) {
  if (path.empty()) validation_error(flag + " is required");
  if (!fs::is_regular_file(path)) validation_error("input file not found for " + flag + ": '" + path + "'");
}

// Inputs produced by an earlier pipeline stage.
void require_stage_input(const std::string& path, const std::string& what, const std::string& stage) {
  if (path.empty() || !fs::is_regular_file(path)) {
    state_error("missing " + what + " '" + path + "'; run '" + stage + "' first");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{3, "io", "cannot write '" + path.string() + "'"};
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

void ensure_directory(const std::string& dir) {
  if (dir.empty()) validation_error("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{3, "io", "cannot create directory '" + dir + "': " + ec.message()};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv) : started_(utc_now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = std::move(argv);
    doc_["tool_version"] = dapsim_version();
    doc_["configs"] = json::object();
    doc_["outputs"] = json::array();
  }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void config(const std::string& role, const std::string& path) {
    if (!path.empty()) doc_["configs"][role] = path;
  }
  void parameter(const std::string& key, json value) { doc_["parameters"][key] = std::move(value); }
  void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
  void write(const fs::path& path) {
    doc_["start_time"] = started_;
    doc_["end_time"] = utc_now();
    write_text(path, doc_.dump(2));
  }

 private:
  json doc_;
  std::string started_;
};

fs::path sidecar_manifest(const std::string& out) { return fs::path(out + ".manifest.json"); }

// ---- Shared option groups ------------------------------------------------------------

struct PriorOptions {
  std::vector<double> overhead{0.0, 0.1};
  std::vector<double> mu{0.0, 100.0};
  std::vector<double> sigma{0.0, 100.0};

  void add(CLI::App* cmd) {
    cmd->add_option("--prior-overhead", overhead, "Overhead prior bounds (low high)")->expected(2)->capture_default_str();
    cmd->add_option("--prior-mu", mu, "Background-load mean prior bounds (low high)")->expected(2)->capture_default_str();
    cmd->add_option("--prior-sigma", sigma, "Background-load deviation prior bounds (low high)")
        ->expected(2)
        ->capture_default_str();
  }
  dapsim_prior get() const {
    dapsim_prior p{};
    const std::vector<double>* dims[3] = {&overhead, &mu, &sigma};
    for (int d = 0; d < 3; ++d) {
      p.low[d] = (*dims[d])[0];
      p.high[d] = (*dims[d])[1];
      if (!(p.low[d] < p.high[d])) validation_error("prior bounds need low < high");
    }
    return p;
  }
  json to_json() const { return json{{"overhead", overhead}, {"mu", mu}, {"sigma", sigma}}; }
};

struct ProblemOptions {
  std::string topology;
  std::string workload;
  std::string protocol;
  bool reference = false;
  std::uint64_t workload_seed = 7;
  std::int64_t horizon = 1'000'000;

  void add(CLI::App* cmd) {
    cmd->add_option("--topology", topology, "Topology JSON");
    cmd->add_option("--workload", workload, "Workload JSON (generator or replay)");
    cmd->add_option("--protocol", protocol, "Protocol the calibrated setting applies to (default: all)");
    cmd->add_flag("--reference", reference, "Use the built-in single-link production campaign");
    cmd->add_option("--workload-seed", workload_seed, "Generator seed of the built-in campaign")->capture_default_str();
    cmd->add_option("--horizon", horizon, "Tick limit per simulation")->check(CLI::PositiveNumber)->capture_default_str();
  }
  Problem build(Manifest& manifest) const {
    dapsim_problem* raw = nullptr;
    if (reference) {
      if (!topology.empty() || !workload.empty()) validation_error("--reference excludes --topology/--workload");
      check(dapsim_problem_reference(workload_seed, &raw));
      manifest.parameter("reference_workload_seed", workload_seed);
      return Problem(raw);
    }
    require_input(topology, "--topology");
    require_input(workload, "--workload");
    dapsim_grid* g = nullptr;
    check(dapsim_grid_load(topology.c_str(), &g));
    Grid grid(g);
    dapsim_workload* w = nullptr;
    check(dapsim_workload_load(workload.c_str(), &w));
    Workload wl(w);
    check(dapsim_problem_create(grid.get(), wl.get(), protocol.empty() ? nullptr : protocol.c_str(), horizon, &raw));
    manifest.config("topology", topology);
    manifest.config("workload", workload);
    if (!protocol.empty()) manifest.parameter("protocol", protocol);
    return Problem(raw);
  }
};

struct TrainOptions {
  int epochs = 30;
  double learning_rate = 1e-4;
  int batch_size = 64;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--lr", learning_rate, "ADAM learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--batch-size", batch_size, "Tuples per batch")->check(CLI::PositiveNumber)->capture_default_str();
  }
  dapsim_train_options get(std::uint64_t seed) const { return {epochs, learning_rate, batch_size, seed}; }
  json to_json() const { return json{{"epochs", epochs}, {"learning_rate", learning_rate}, {"batch_size", batch_size}}; }
};

void print_epoch(int epoch, double loss, void*) { std::fprintf(stderr, "epoch %d loss %.6f\n", epoch, loss); }

void print_progress(size_t done, size_t total, void*) {
  const size_t step = total >= 10 ? total / 10 : 1;
  if (done % step == 0 || done == total) std::fprintf(stderr, "generated %zu/%zu\n", done, total);
}

void print_stage(const char* stage, void*) { std::fprintf(stderr, "closure: %s\n", stage); }

std::array<double, 3> load_x_true(const std::string& fit_path, const std::string& observations_path) {
  dapsim_fit fit{};
  if (!fit_path.empty()) {
    require_stage_input(fit_path, "coefficient document", "fit --model eq1");
    std::ifstream in(fit_path);
    std::stringstream ss;
    ss << in.rdbuf();
    check(dapsim_fit_from_json(ss.str().c_str(), &fit));
  } else if (!observations_path.empty()) {
    require_input(observations_path, "--observations");
    dapsim_observations* raw = nullptr;
    check(dapsim_observations_load(observations_path.c_str(), &raw));
    Observations obs(raw);
    check(dapsim_fit_model(obs.get(), "eq1", &fit));
  } else {
    validation_error("one of --x-true or --observations is required");
  }
  if (fit.n_coefficients != 3) validation_error("the observed coefficients must come from model eq1 (a, b, c)");
  return {fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dapsim: data access profile simulation and calibration"};
  app.set_version_flag("--version", std::string(dapsim_version()));
  app.set_config("--config", "", "Run-config file (TOML/INI); command-line flags override it");
  app.require_subcommand(1);
  const std::vector<std::string> args(argv, argv + argc);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "Master seed")->capture_default_str(); };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run one simulation and log observations");
  std::string topology, workload, setting_path, out;
  std::int64_t horizon = 1'000'000;
  bool events = false;
  sim->add_option("--topology", topology, "Topology JSON")->required();
  sim->add_option("--workload", workload, "Workload JSON")->required();
  sim->add_option("--setting", setting_path, "Simulator setting JSON (overhead, mu, sigma)");
  sim->add_option("--horizon", horizon, "Tick limit")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_flag("--events", events, "Also write events.log");
  add_seed(sim);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the throughput model to logged observations");
  std::string observations, model = "eq1", fit_out;
  std::int64_t window = 0;
  fit->add_option("--observations", observations, "Observation CSV")->required();
  fit->add_option("--model", model, "eq1 or eq2")->check(CLI::IsMember({"eq1", "eq2"}))->capture_default_str();
  fit->add_option("--window", window, "Fit per start_tick window of N ticks")->check(CLI::PositiveNumber);
  fit->add_option("--out", fit_out, "Output JSON")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Likelihood-free calibration pipeline");
  cal->require_subcommand(1);
  PriorOptions prior;
  ProblemOptions problem_opts;

  auto* gen = cal->add_subcommand("gen", "Simulate (theta, x) training tuples from the prior");
  std::size_t n_tuples = 50'000;
  int jobs = 1;
  std::string gen_out;
  problem_opts.add(gen);
  prior.add(gen);
  gen->add_option("--n", n_tuples, "Number of tuples")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--jobs", jobs, "Parallel simulations")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--out", gen_out, "Training CSV")->required();
  add_seed(gen);

  auto* train = cal->add_subcommand("train", "Train the ratio classifier");
  std::string training_path, train_out;
  TrainOptions train_opts;
  train->add_option("--training", training_path, "Training CSV from 'calibrate gen'")->required();
  prior.add(train);
  train_opts.add(train);
  train->add_option("--out", train_out, "Classifier file")->required();
  add_seed(train);

  auto* sample = cal->add_subcommand("sample", "Run MCMC with classifier likelihood ratios");
  std::string classifier_path, x_true_path, sample_obs, sample_out;
  std::size_t burn_in = 2'000, samples = 20'000;
  std::vector<double> theta0, scales;
  sample->add_option("--classifier", classifier_path, "Classifier from 'calibrate train'")->required();
  sample->add_option("--x-true", x_true_path, "Observed eq1 fit JSON");
  sample->add_option("--observations", sample_obs, "Observed CSV (fitted with eq1)");
  prior.add(sample);
  sample->add_option("--burn-in", burn_in, "Burn-in states")->capture_default_str();
  sample->add_option("--samples", samples, "Kept states")->check(CLI::PositiveNumber)->capture_default_str();
  sample->add_option("--theta0", theta0, "Start state (overhead mu sigma); default prior centre")->expected(3);
  sample->add_option("--scales", scales, "Proposal standard deviations; default 5% of each range")->expected(3);
  sample->add_option("--out", sample_out, "Chain CSV")->required();
  add_seed(sample);

  auto* summarize = cal->add_subcommand("summarize", "Posterior mode and median from a chain");
  std::string chain_path, summary_out;
  int bins = 50;
  summarize->add_option("--chain", chain_path, "Chain CSV from 'calibrate sample'")->required();
  prior.add(summarize);
  summarize->add_option("--bins", bins, "Histogram bins per axis")->check(CLI::Range(2, 1'000'000))->capture_default_str();
  summarize->add_option("--out", summary_out, "Summary JSON")->required();

  // closure
  auto* closure = app.add_subcommand("closure", "Self-calibration closure experiment");
  std::string theta_true_path, closure_out;
  std::size_t tuples = 50'000;
  int resimulations = 100;
  TrainOptions closure_train;
  ProblemOptions closure_problem;
  closure->add_option("--theta-true", theta_true_path, "Hidden setting JSON")->required();
  closure_problem.add(closure);
  prior.add(closure);
  closure->add_option("--tuples", tuples, "Training tuples")->check(CLI::PositiveNumber)->capture_default_str();
  closure_train.add(closure);
  closure->add_option("--burn-in", burn_in, "Burn-in states")->capture_default_str();
  closure->add_option("--samples", samples, "Kept states")->check(CLI::PositiveNumber)->capture_default_str();
  closure->add_option("--bins", bins, "Histogram bins per axis")->check(CLI::Range(2, 1'000'000))->capture_default_str();
  closure->add_option("--resimulations,-K", resimulations, "Re-simulations under the recovered setting")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  closure->add_option("--jobs", jobs, "Parallel simulations during generation")->check(CLI::PositiveNumber);
  closure->add_option("--out", closure_out, "Output directory")->required();
  add_seed(closure);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      return report(CliError{2, "validation", e.what()});
    }
    const CLI::Option* config_opt = app.get_config_ptr();
    const std::string config_path = config_opt != nullptr && config_opt->count() > 0 ? config_opt->as<std::string>() : "";

    if (*sim) {
      Manifest manifest("simulate", args);
      manifest.seed(seed);
      manifest.config("run", config_path);
      require_input(topology, "--topology");
      require_input(workload, "--workload");
      manifest.config("topology", topology);
      manifest.config("workload", workload);
      dapsim_grid* g = nullptr;
      check(dapsim_grid_load(topology.c_str(), &g));
      Grid grid(g);
      dapsim_workload* w = nullptr;
      check(dapsim_workload_load(workload.c_str(), &w));
      Workload wl(w);
      Setting setting;
      if (!setting_path.empty()) {
        require_input(setting_path, "--setting");
        dapsim_setting* s = nullptr;
        check(dapsim_setting_load(setting_path.c_str(), &s));
        setting.reset(s);
        manifest.config("setting", setting_path);
      }
      dapsim_run_options run{seed, horizon, events ? 1 : 0};
      dapsim_result* r = nullptr;
      check(dapsim_simulate(grid.get(), wl.get(), setting.get(), &run, &r));
      Result result(r);

      ensure_directory(out);
      const fs::path obs_path = fs::path(out) / "observations.csv";
      check(dapsim_observations_save(dapsim_result_observations(result.get()), obs_path.string().c_str()));
      manifest.output(obs_path);
      if (events) {
        const fs::path ev = fs::path(out) / "events.log";
        check(dapsim_result_save_events(result.get(), ev.string().c_str()));
        manifest.output(ev);
      }
      manifest.parameter("horizon", horizon);
      manifest.parameter("end_tick", dapsim_result_end_tick(result.get()));
      manifest.parameter("truncated", dapsim_result_truncated(result.get()) != 0);
      manifest.parameter("observations", dapsim_observations_count(dapsim_result_observations(result.get())));
      manifest.parameter("failed_jobs", dapsim_result_failed_jobs(result.get()));
      manifest.write(fs::path(out) / "manifest.json");
      if (dapsim_result_truncated(result.get())) std::cerr << "warning: horizon reached with work outstanding\n";
      return 0;
    }

    if (*fit) {
      Manifest manifest("fit", args);
      manifest.config("run", config_path);
      require_input(observations, "--observations");
      manifest.config("observations", observations);
      dapsim_observations* raw = nullptr;
      check(dapsim_observations_load(observations.c_str(), &raw));
      Observations obs(raw);
      std::string doc;
      if (window > 0) {
        char* text = nullptr;
        check(dapsim_windowed_fits_json(obs.get(), model.c_str(), window, &text));
        doc = take_string(text);
        manifest.parameter("window", window);
      } else {
        dapsim_fit f{};
        check(dapsim_fit_model(obs.get(), model.c_str(), &f));
        char* text = nullptr;
        check(dapsim_fit_to_json(&f, &text));
        doc = take_string(text);
      }
      manifest.parameter("model", model);
      write_text(fit_out, doc);
      manifest.output(fit_out);
      manifest.write(sidecar_manifest(fit_out));
      return 0;
    }

    if (*gen) {
      Manifest manifest("calibrate gen", args);
      manifest.seed(seed);
      manifest.config("run", config_path);
      const dapsim_prior p = prior.get();
      Problem problem = problem_opts.build(manifest);
      dapsim_training_set* raw = nullptr;
      check(dapsim_training_generate(problem.get(), &p, n_tuples, seed, jobs, print_progress, nullptr, &raw));
      TrainingSet ts(raw);
      check(dapsim_training_save(ts.get(), gen_out.c_str()));
      manifest.parameter("n", n_tuples);
      manifest.parameter("jobs", jobs);
      manifest.parameter("prior", prior.to_json());
      manifest.output(gen_out);
      manifest.write(sidecar_manifest(gen_out));
      return 0;
    }

    if (*train) {
      Manifest manifest("calibrate train", args);
      manifest.seed(seed);
      manifest.config("run", config_path);
      require_stage_input(training_path, "training set", "calibrate gen");
      manifest.config("training", training_path);
      const dapsim_prior p = prior.get();
      dapsim_training_set* raw = nullptr;
      check(dapsim_training_load(training_path.c_str(), &p, &raw));
      TrainingSet ts(raw);
      const dapsim_train_options options = train_opts.get(seed);
      dapsim_classifier* c = nullptr;
      double final_loss = 0.0;
      check(dapsim_classifier_train(ts.get(), &options, print_epoch, nullptr, &c, &final_loss));
      Classifier clf(c);
      check(dapsim_classifier_save(clf.get(), train_out.c_str()));
      manifest.parameter("training", train_opts.to_json());
      manifest.parameter("prior", prior.to_json());
      manifest.parameter("final_loss", final_loss);
      manifest.output(train_out);
      manifest.write(sidecar_manifest(train_out));
      return 0;
    }

    if (*sample) {
      Manifest manifest("calibrate sample", args);
      manifest.seed(seed);
      manifest.config("run", config_path);
      require_stage_input(classifier_path, "classifier", "calibrate train");
      manifest.config("classifier", classifier_path);
      manifest.config("x_true", x_true_path.empty() ? sample_obs : x_true_path);
      const auto x_true = load_x_true(x_true_path, sample_obs);
      const dapsim_prior p = prior.get();
      dapsim_classifier* c = nullptr;
      check(dapsim_classifier_load(classifier_path.c_str(), &c));
      Classifier clf(c);
      dapsim_mcmc_options options{};
      dapsim_mcmc_options_default(&options);
      options.burn_in = burn_in;
      options.samples = samples;
      options.seed = seed;
      if (!theta0.empty()) {
        options.has_theta0 = 1;
        std::copy(theta0.begin(), theta0.end(), options.theta0);
      }
      if (!scales.empty()) {
        options.has_scales = 1;
        std::copy(scales.begin(), scales.end(), options.scales);
      }
      dapsim_chain* ch = nullptr;
      check(dapsim_mcmc_sample(clf.get(), x_true.data(), &p, &options, &ch));
      Chain chain(ch);
      check(dapsim_chain_save(chain.get(), sample_out.c_str()));
      manifest.parameter("x_true", x_true);
      manifest.parameter("burn_in", burn_in);
      manifest.parameter("samples", samples);
      manifest.parameter("acceptance_rate", dapsim_chain_acceptance_rate(chain.get()));
      manifest.output(sample_out);
      manifest.write(sidecar_manifest(sample_out));
      return 0;
    }

    if (*summarize) {
      Manifest manifest("calibrate summarize", args);
      manifest.config("run", config_path);
      require_stage_input(chain_path, "chain", "calibrate sample");
      manifest.config("chain", chain_path);
      const dapsim_prior p = prior.get();
      dapsim_chain* ch = nullptr;
      check(dapsim_chain_load(chain_path.c_str(), &ch));
      Chain chain(ch);
      dapsim_posterior posterior{};
      check(dapsim_posterior_summarize(chain.get(), &p, bins, &posterior));
      char* text = nullptr;
      check(dapsim_posterior_to_json(&posterior, &text));
      write_text(summary_out, take_string(text));
      manifest.parameter("bins", bins);
      manifest.output(summary_out);
      manifest.write(sidecar_manifest(summary_out));
      return 0;
    }

    if (*closure) {
      Manifest manifest("closure", args);
      manifest.seed(seed);
      manifest.config("run", config_path);
      require_input(theta_true_path, "--theta-true");
      manifest.config("theta_true", theta_true_path);
      dapsim_setting* s = nullptr;
      check(dapsim_setting_load(theta_true_path.c_str(), &s));
      Setting hidden(s);
      const dapsim_prior p = prior.get();
      Problem problem = closure_problem.build(manifest);

      dapsim_closure_options options{};
      dapsim_closure_options_default(&options);
      dapsim_setting_values(hidden.get(), options.theta_true);
      options.training_tuples = tuples;
      options.jobs = jobs;
      options.training = closure_train.get(0);
      options.burn_in = burn_in;
      options.samples = samples;
      options.bins = bins;
      options.resimulations = resimulations;
      options.seed = seed;
      dapsim_closure_report* raw = nullptr;
      check(dapsim_closure_run(problem.get(), &p, &options, print_stage, nullptr, &raw));
      Closure report(raw);

      ensure_directory(closure_out);
      char* table = nullptr;
      check(dapsim_closure_table(report.get(), 10, &table));
      const std::string table_text = take_string(table);
      char* doc = nullptr;
      check(dapsim_closure_to_json(report.get(), &doc));
      const fs::path table_path = fs::path(closure_out) / "closure_table.txt";
      const fs::path json_path = fs::path(closure_out) / "closure.json";
      write_text(table_path, table_text);
      write_text(json_path, take_string(doc));
      std::cout << table_text;
      manifest.parameter("tuples", tuples);
      manifest.parameter("training", closure_train.to_json());
      manifest.parameter("burn_in", burn_in);
      manifest.parameter("samples", samples);
      manifest.parameter("bins", bins);
      manifest.parameter("resimulations", resimulations);
      manifest.parameter("prior", prior.to_json());
      manifest.output(table_path);
      manifest.output(json_path);
      manifest.write(fs::path(closure_out) / "manifest.json");
      return 0;
    }
  } catch (const CliError& e) {
    return report(e);
  } catch (const std::exception& e) {
    return report(CliError{3, "internal", e.what()});
  }
  return 0;
}
