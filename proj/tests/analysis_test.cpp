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

#include <doctest.h>

#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "dapsim/analysis.hpp"
#include "dapsim/error.hpp"
#include "dapsim/random.hpp"
#include "dapsim/sim_engine.hpp"
#include "fixtures.hpp"
#include "ols_oracle.hpp"

using namespace dapsim;

namespace {

Observation obs(double T, double S, double conth, double conpr, Tick start) {
  Observation o;
  o.T = T;
  o.S = S;
  o.ConTh = conth;
  o.ConPr = conpr;
  o.start_tick = start;
  return o;
}

}  // namespace

TEST_CASE("noiseless linear response is recovered exactly") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 0, 0, 1, 1, 1, 2, 3, 4, 1;
  const Eigen::VectorXd y = 2.0 * X.col(0) + 3.0 * X.col(1);
  const RegressionFit fit = fit_origin_ols(X, y);
  CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.df_model == 2);
  CHECK(fit.df_residual == 3);

  Eigen::MatrixXd x1(3, 1);
  x1 << 1, 2, 3;
  const RegressionFit single = fit_origin_ols(x1, Eigen::Vector3d(2, 4, 6));
  CHECK(single.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::isinf(single.f_statistic));
}

TEST_CASE("QR solution agrees with the normal-equations oracle") {
  RandomSource rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 1 + trial % 3;
    const auto [X, y] = oracle::random_instance(rng, 50, p);
    const auto expected = oracle::normal_equations(X, y);
    const RegressionFit fit = fit_origin_ols(X, y);
    for (int j = 0; j < p; ++j) {
      REQUIRE(std::abs(fit.coefficients[j] - expected[j]) <= 1e-9 * std::abs(expected[j]));
    }
    // Uncentered R^2 and F from their definitions.
    double rss = 0.0, tss = 0.0;
    for (int i = 0; i < 50; ++i) {
      double pred = 0.0;
      for (int j = 0; j < p; ++j) pred += X(i, j) * expected[j];
      rss += (y(i) - pred) * (y(i) - pred);
      tss += y(i) * y(i);
    }
    CHECK(fit.r_squared == doctest::Approx(1.0 - rss / tss).epsilon(1e-9));
    CHECK(fit.f_statistic == doctest::Approx(((tss - rss) / p) / (rss / (50 - p))).epsilon(1e-7));
  }
}

TEST_CASE("power-of-two rescaling is exact and row and column order are irrelevant") {
  RandomSource rng(23);
  const auto [X, y] = oracle::random_instance(rng, 50, 3);
  const RegressionFit base = fit_origin_ols(X, y);

  const RegressionFit scaled_y = fit_origin_ols(X, 4.0 * y);
  Eigen::MatrixXd Xs = X;
  Xs.col(1) *= 8.0;
  const RegressionFit scaled_x = fit_origin_ols(Xs, y);
  Eigen::MatrixXd Xp(50, 3);
  Xp << X.col(2), X.col(0), X.col(1);
  const RegressionFit permuted = fit_origin_ols(Xp, y);
  const RegressionFit reversed = fit_origin_ols(X.colwise().reverse(), y.reverse());
  CHECK(reversed.coefficients == base.coefficients);
  CHECK(reversed.r_squared == base.r_squared);
  for (int j = 0; j < 3; ++j) CHECK(scaled_y.coefficients[j] == 4.0 * base.coefficients[j]);
  CHECK(scaled_x.coefficients[0] == base.coefficients[0]);
  CHECK(scaled_x.coefficients[1] == base.coefficients[1] / 8.0);
  CHECK(scaled_x.coefficients[2] == base.coefficients[2]);
  CHECK(permuted.coefficients[0] == base.coefficients[2]);
  CHECK(permuted.coefficients[1] == base.coefficients[0]);
  CHECK(permuted.coefficients[2] == base.coefficients[1]);
}

TEST_CASE("degenerate designs are reported") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 2, 0, 2, 4, 0, 3, 6.5, 0, 4, 8, 0;
  try {
    fit_origin_ols(X, Eigen::Vector4d(1, 2, 3, 4));
    FAIL("expected rank deficiency");
  } catch (const RankDeficientError& e) {
    CHECK(e.columns() == std::vector<std::size_t>{2});
  }
  Eigen::MatrixXd collinear(4, 2);
  collinear << 1, 2, 2, 4, 3, 6, 4, 8;
  CHECK_THROWS_AS(fit_origin_ols(collinear, Eigen::Vector4d(1, 2, 3, 4)), RankDeficientError);
  CHECK_THROWS_AS(fit_origin_ols(Eigen::MatrixXd::Ones(2, 3), Eigen::Vector2d(1, 2)), ValidationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(4, 1);
  bad(2, 0) = NAN;
  CHECK_THROWS_AS(fit_origin_ols(bad, Eigen::Vector4d(1, 2, 3, 4)), NumericError);
}

TEST_CASE("pure size-proportional data names the idle regressors") {
  std::vector<Observation> o;
  for (int i = 1; i <= 6; ++i) o.push_back(obs(0.5 * 100 * i, 100.0 * i, 0.0, 0.0, i));
  try {
    fit_eq1(o);
    FAIL("expected rank deficiency");
  } catch (const RankDeficientError& e) {
    CHECK(e.columns() == std::vector<std::size_t>{1, 2});
    CHECK(std::string(e.what()).find("ConTh,ConPr") != std::string::npos);
  }
  Eigen::MatrixXd s(6, 1);
  Eigen::VectorXd t(6);
  for (int i = 0; i < 6; ++i) {
    s(i, 0) = o[i].S;
    t(i) = o[i].T;
  }
  CHECK(fit_origin_ols(s, t).coefficients[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("windowed fits cover the populated span") {
  std::vector<Observation> o;
  auto add_window = [&](Tick start, double a, double b) {
    for (int i = 0; i < 5; ++i) {
      const double S = 100 + 37 * i, C = 50 + 91 * ((i * 3) % 5);
      o.push_back(obs(a * S + b * C, S, 0, C, start + i));
    }
  };
  SUBCASE("one window equals the global fit") {
    add_window(0, 0.1, 0.02);
    const auto series = windowed_fits(o, 3600);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].fit.has_value());
    CHECK(series[0].fit->coefficients == fit_eq2(o).coefficients);
  }
  SUBCASE("an empty middle window is absent") {
    add_window(0, 0.1, 0.02);
    add_window(7200, 0.2, 0.01);
    const auto series = windowed_fits(o, 3600);
    REQUIRE(series.size() == 3);
    CHECK(series[0].window_start == 0);
    CHECK(series[1].window_start == 3600);
    CHECK_FALSE(series[1].fit.has_value());
    REQUIRE(series[2].fit.has_value());
    CHECK(series[2].fit->coefficients[0] == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(series[2].fit->coefficients[1] == doctest::Approx(0.01).epsilon(1e-10));
  }
  SUBCASE("a window with too few points is absent") {
    o.push_back(obs(1, 10, 0, 3, 10));
    CHECK_FALSE(windowed_fits(o, 100)[0].fit.has_value());
  }
  CHECK_THROWS_AS(windowed_fits(o, 0), ValidationError);
}

TEST_CASE("a stationary workload gives stable coefficients across windows") {
  const Grid g = build_grid(fixtures::single_link_topology(200.0, 0.0, 3.0, 0.0).dump());
  std::vector<fixtures::json> jobs;
  RandomSource rng(4);
  for (int w = 0; w < 10; ++w) {
    for (int k = 0; k < 8; ++k) {
      const int threads = static_cast<int>(rng.uniform_int(1, 3));
      std::vector<double> files;
      for (int f = 0; f < threads; ++f) files.push_back(std::round(rng.uniform(300.0, 3000.0)));
      jobs.push_back(fixtures::remote_job(w * 3600 + static_cast<long>(rng.uniform_int(0, 1800)), threads, files));
    }
  }
  const auto result = run(g, parse_workload(fixtures::replay(jobs).dump()), std::nullopt,
                          RunOptions{0, 1'000'000, false});
  const auto series = windowed_fits(result.observations, 3600);
  REQUIRE(series.size() == 10);
  std::vector<double> a;
  for (const auto& s : series) {
    REQUIRE(s.fit.has_value());
    a.push_back(s.fit->coefficients[0]);
  }
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  CHECK(std::sqrt(var / (a.size() - 1)) / mean < 0.2);
}

TEST_CASE("coefficient error") {
  CHECK(coefficient_error(0.02385, 0.02352) == doctest::Approx(0.0138).epsilon(0.01));
  CHECK(coefficient_error(0.04886, 0.049) == doctest::Approx(0.003).epsilon(0.05));
  CHECK(coefficient_error(3.7, 3.7) == 0.0);
  CHECK(coefficient_error(-2.0, -1.0) == 0.5);
  CHECK_THROWS_AS(coefficient_error(0.0, 1.0), ValidationError);
}

TEST_CASE("fit JSON carries every statistic") {
  Eigen::MatrixXd x1(3, 1);
  x1 << 1, 2, 3;
  const auto exact = nlohmann::json::parse(fit_to_json(fit_origin_ols(x1, Eigen::Vector3d(2, 4, 6))));
  CHECK(exact["f_statistic"] == "inf");
  CHECK(exact["n"] == 3);
  CHECK(exact["df_residual"] == 2);
  CHECK(exact["coefficients"].size() == 1);
  CHECK(parse_throughput_model("eq1") == ThroughputModel::eq1);
  CHECK_THROWS_AS(parse_throughput_model("eq3"), ValidationError);
}
