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

#include "dapsim/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/QR>
#include <json.hpp>

#include "dapsim/error.hpp"

namespace dapsim {

using nlohmann::json;

namespace {

// Relative pivot threshold below which a column is treated as dependent.
constexpr double kRankThreshold = 1e-10;
// A residual norm below this fraction of |y| is rounding noise: the fit is exact.
constexpr double kExactFitRelResidual = 1e-13;

}  // namespace

RegressionFit fit_origin_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (p < 1) throw ValidationError("fit: at least one regressor required");
  if (y.size() != n) throw ValidationError("fit: response length does not match design rows");
  if (n <= p) {
    throw ValidationError("fit: need n > p observations (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  if (!X.allFinite() || !y.allFinite()) throw NumericError("fit: non-finite input");

  std::vector<std::size_t> zero_columns;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (X.col(j).squaredNorm() == 0.0) zero_columns.push_back(static_cast<std::size_t>(j));
  }
  if (!zero_columns.empty()) throw RankDeficientError("fit: all-zero regressor column", zero_columns);

  // The solver runs on a canonical arrangement of the data so that the result
  // is bit-for-bit independent of row order, column order and power-of-two
  // rescaling: vectorized kernels otherwise round differently depending on
  // where a column sits in memory.
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::vector<std::vector<double>> row_values(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& v = row_values[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) v.push_back(std::abs(X(i, j)));
    std::sort(v.begin(), v.end());
  }
  std::stable_sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (y(a) != y(b)) return y(a) < y(b);
    return row_values[static_cast<std::size_t>(a)] < row_values[static_cast<std::size_t>(b)];
  });

  // Unit-norm columns make the pivot threshold relative per column rather
  // than dominated by the largest-magnitude regressor. Norms are summed in
  // canonical row order with a scalar loop for the same reason as above.
  Eigen::VectorXd yc(n);
  Eigen::MatrixXd U(n, p);
  Eigen::VectorXd norms(p);
  for (Eigen::Index i = 0; i < n; ++i) yc(i) = y(rows[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < p; ++j) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = X(rows[static_cast<std::size_t>(i)], j);
      ss += v * v;
    }
    norms(j) = std::sqrt(ss);
    for (Eigen::Index i = 0; i < n; ++i) U(i, j) = X(rows[static_cast<std::size_t>(i)], j) / norms(j);
  }
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(p));
  std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  std::stable_sort(cols.begin(), cols.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (U(i, a) != U(i, b)) return U(i, a) < U(i, b);
    }
    return false;
  });
  Eigen::MatrixXd Uc(n, p);
  for (Eigen::Index k = 0; k < p; ++k) Uc.col(k) = U.col(cols[static_cast<std::size_t>(k)]);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Uc);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    std::vector<std::size_t> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      dependent.push_back(static_cast<std::size_t>(cols[static_cast<std::size_t>(perm(k))]));
    }
    std::sort(dependent.begin(), dependent.end());
    throw RankDeficientError("fit: design matrix is rank deficient", dependent);
  }
  const Eigen::VectorXd gamma = qr.solve(yc);
  Eigen::VectorXd beta(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index j = cols[static_cast<std::size_t>(k)];
    beta(j) = gamma(k) / norms(j);
  }

  RegressionFit fit;
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());
  const double tss = yc.squaredNorm();
  double rss = (yc - Uc * gamma).squaredNorm();
  if (rss <= kExactFitRelResidual * kExactFitRelResidual * tss) rss = 0.0;
  fit.n = static_cast<int>(n);
  fit.df_model = static_cast<int>(p);
  fit.df_residual = static_cast<int>(n - p);
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  const double explained = std::max(0.0, tss - rss);
  fit.f_statistic = rss > 0.0 ? (explained / static_cast<double>(p)) / (rss / static_cast<double>(n - p))
                              : std::numeric_limits<double>::infinity();
  return fit;
}

ThroughputModel parse_throughput_model(std::string_view name) {
  if (name == "eq1") return ThroughputModel::eq1;
  if (name == "eq2") return ThroughputModel::eq2;
  throw ValidationError("unknown model '" + std::string(name) + "' (expected eq1 or eq2)");
}

std::vector<std::string> regressor_names(ThroughputModel model) {
  if (model == ThroughputModel::eq1) return {"S", "ConTh", "ConPr"};
  return {"S", "ConPr"};
}

RegressionFit fit_model(ThroughputModel model, const std::vector<Observation>& obs) {
  const bool eq1 = model == ThroughputModel::eq1;
  const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd X(n, eq1 ? 3 : 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = obs[static_cast<std::size_t>(i)];
    y(i) = o.T;
    X(i, 0) = o.S;
    if (eq1) {
      X(i, 1) = o.ConTh;
      X(i, 2) = o.ConPr;
    } else {
      X(i, 1) = o.ConPr;
    }
  }
  try {
    return fit_origin_ols(X, y);
  } catch (const RankDeficientError& e) {
    const auto names = regressor_names(model);
    std::string cols;
    for (std::size_t c : e.columns()) cols += (cols.empty() ? "" : ",") + names.at(c);
    throw RankDeficientError(std::string(e.what()) + " (columns: " + cols + ")", e.columns());
  }
}

RegressionFit fit_eq1(const std::vector<Observation>& observations) {
  return fit_model(ThroughputModel::eq1, observations);
}

RegressionFit fit_eq2(const std::vector<Observation>& observations) {
  return fit_model(ThroughputModel::eq2, observations);
}

std::vector<WindowFit> windowed_fits(const std::vector<Observation>& observations, Tick window,
                                     ThroughputModel model) {
  if (window < 1) throw ValidationError("windowed_fits: window must be >= 1");
  std::vector<WindowFit> series;
  if (observations.empty()) return series;

  std::map<Tick, std::vector<Observation>> buckets;
  for (const auto& o : observations) {
    const Tick k = o.start_tick >= 0 ? o.start_tick / window : -((-o.start_tick + window - 1) / window);
    buckets[k].push_back(o);
  }
  const Tick first = buckets.begin()->first;
  const Tick last = buckets.rbegin()->first;
  for (Tick k = first; k <= last; ++k) {
    WindowFit entry{k * window, std::nullopt};
    auto it = buckets.find(k);
    if (it != buckets.end()) {
      try {
        entry.fit = fit_model(model, it->second);
      } catch (const RankDeficientError&) {
      } catch (const ValidationError&) {
      }
    }
    series.push_back(std::move(entry));
  }
  return series;
}

double coefficient_error(double coef_true, double coef_sim) {
  if (coef_true == 0.0) throw ValidationError("coefficient_error: true coefficient is zero");
  return std::abs(coef_true - coef_sim) / std::abs(coef_true);
}

namespace {

json fit_json(const RegressionFit& fit) {
  json f;
  f["coefficients"] = fit.coefficients;
  f["r_squared"] = fit.r_squared;
  if (std::isfinite(fit.f_statistic)) {
    f["f_statistic"] = fit.f_statistic;
  } else {
    f["f_statistic"] = "inf";
  }
  f["df_model"] = fit.df_model;
  f["df_residual"] = fit.df_residual;
  f["n"] = fit.n;
  return f;
}

}  // namespace

std::string fit_to_json(const RegressionFit& fit) { return fit_json(fit).dump(2); }

std::string fit_series_to_json(const std::vector<WindowFit>& series) {
  json doc = json::array();
  for (const auto& w : series) {
    json e{{"window_start", w.window_start}};
    e["fit"] = w.fit ? fit_json(*w.fit) : json(nullptr);
    doc.push_back(std::move(e));
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Observation CSV

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations) {
  out << kObservationCsvHeader << '\n';
  for (const auto& o : observations) {
    out << format_double(o.T) << ',' << format_double(o.S) << ',' << format_double(o.ConTh) << ','
        << format_double(o.ConPr) << ',' << o.start_tick << ',' << o.link << ',' << o.job << ','
        << to_string(o.profile) << '\n';
  }
}

void save_observations_csv(const std::filesystem::path& path, const std::vector<Observation>& observations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_observations_csv(out, observations);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError("observations line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<Observation> read_observations_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("observations: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kObservationCsvHeader) {
    throw ValidationError(std::string("observations: header must be '") + kObservationCsvHeader + "'");
  }
  std::vector<Observation> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ValidationError("observations line " + std::to_string(number) + ": expected 8 fields");
    Observation o;
    o.T = parse_number(f[0], number);
    o.S = parse_number(f[1], number);
    o.ConTh = parse_number(f[2], number);
    o.ConPr = parse_number(f[3], number);
    o.start_tick = static_cast<Tick>(parse_number(f[4], number));
    o.link = f[5];
    o.job = f[6];
    o.profile = parse_profile_kind(f[7]);
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Observation> load_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_observations_csv(in);
}

}  // namespace dapsim
