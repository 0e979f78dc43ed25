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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dapsim/grid_model.hpp"
#include "dapsim/observation.hpp"

namespace dapsim {

/// Origin-constrained least-squares fit with uncentered fit statistics.
///
/// r_squared is 1 - RSS / sum(y^2), the through-origin definition; it is not
/// comparable with the centered R^2 reported for models with an intercept.
/// f_statistic is ((sum(y^2) - RSS) / p) / (RSS / (n - p)) and is +inf for an
/// exact fit (residual norm at most 1e-13 times the response norm).
struct RegressionFit {
  std::vector<double> coefficients;
  double r_squared = 0.0;
  double f_statistic = 0.0;
  int df_model = 0;
  int df_residual = 0;
  int n = 0;
};

/// Least squares without intercept via column-pivoted Householder QR.
/// Throws ValidationError when n <= p and RankDeficientError when X lacks
/// full column rank.
RegressionFit fit_origin_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

enum class ThroughputModel {
  eq1,  // T = a*S + b*ConTh + c*ConPr
  eq2,  // T = a*S + b*ConPr
};

ThroughputModel parse_throughput_model(std::string_view name);
std::vector<std::string> regressor_names(ThroughputModel model);

RegressionFit fit_eq1(const std::vector<Observation>& observations);
RegressionFit fit_eq2(const std::vector<Observation>& observations);
RegressionFit fit_model(ThroughputModel model, const std::vector<Observation>& observations);

struct WindowFit {
  Tick window_start = 0;
  std::optional<RegressionFit> fit;  // absent for degenerate windows
};

/// Partitions by start_tick into consecutive windows of `window` ticks and
/// fits `model` in each, covering every window from the first populated one
/// to the last.
std::vector<WindowFit> windowed_fits(const std::vector<Observation>& observations, Tick window,
                                     ThroughputModel model = ThroughputModel::eq2);

/// |true - sim| / |true|; equal to |true - sim| / true for the positive
/// coefficients the model is meant for. Throws ValidationError when coef_true is zero.
double coefficient_error(double coef_true, double coef_sim);

/// `{coefficients, r_squared, f_statistic, df_model, df_residual, n}`.
std::string fit_to_json(const RegressionFit& fit);
std::string fit_series_to_json(const std::vector<WindowFit>& series);

}  // namespace dapsim
