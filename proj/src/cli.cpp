// Copyright 2026 The qfit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qfit/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "qfit/hamsim.hpp"

namespace qfit::cli {

namespace {

using Clock = std::chrono::steady_clock;

int boost_rounds_for_failure(double failure) {
  for (int rounds = 1;; rounds += 2) {
    if (binomial_tail(rounds, 1.0 / 3.0, (rounds + 1) / 2) <= failure) {
      return rounds;
    }
  }
}

RealMatrix parse_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(cell[used])) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError,
                    path + ": line " + std::to_string(line_no) +
                        ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::ParseError,
                  path + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, got " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::ParseError, path + ": no data rows");
  }
  RealMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

Json cost_json(const CostCounters& c) {
  return Json{{"oracle_F_queries", c.oracle_F_queries},
              {"oracle_y_queries", c.oracle_y_queries},
              {"ae_applications", c.ae_applications},
              {"pe_unitary_applications", c.pe_unitary_applications},
              {"dme_copies", c.dme_copies},
              {"preparation_circuits", c.preparation_circuits}};
}

Json outcome_json(const EstimationOutcome& o) {
  return Json{{"value", o.value},
              {"target_error", o.claimed_error},
              {"claimed_confidence", o.claimed_confidence},
              {"repetitions", o.repetitions_used},
              {"seeds", o.seed_trace}};
}

Json problem_json(const FitProblem& p, const ClassicalFit& fit) {
  return Json{{"n", p.n()},          {"d", p.d()},
              {"kappa", p.kappa},    {"nu", p.nu},
              {"chi", p.chi},        {"phi_classical", fit.phi},
              {"alpha", p.alpha},    {"beta", p.beta},
              {"eta", p.eta},        {"zeta", p.zeta},
              {"a", p.a},            {"b", p.b}};
}

Json classical_json(const ClassicalFit& fit) {
  return Json{{"phi", fit.phi},
              {"E_hat", fit.E_hat},
              {"theta_norm", fit.theta_norm},
              {"theta_hat", std::vector<double>(
                                fit.theta_hat.data(),
                                fit.theta_hat.data() + fit.theta_hat.size())},
              {"theta_bar", std::vector<double>(
                                fit.theta_bar.data(),
                                fit.theta_bar.data() + fit.theta_bar.size())}};
}

/// Smallest count s such that P(Binomial(n, p0) >= s) >= level: observing at
/// least s successes is consistent with rate p0 at the given confidence.
int binomial_pass_threshold(int n, double p0, double level) {
  int lo = 0, hi = n;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (binomial_tail(n, p0, mid) >= level) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

Json slope_interval(const std::vector<double>& slopes) {
  const double n = static_cast<double>(slopes.size());
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  const double half = 1.96 * std::sqrt(var / n);
  return Json{{"mean", mean}, {"lo", mean - half}, {"hi", mean + half}};
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ComplexMatrix random_hermitian(Index dim, Rng& rng, double scale) {
  ComplexMatrix m(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  }
  ComplexMatrix h = (m + m.adjoint()) / 2.0;
  const double norm = operator_norm(h);
  if (norm > 0.0) h *= scale / norm;
  return h;
}

DensityMatrix random_density(Index dim, Rng& rng) {
  ComplexMatrix m(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  }
  ComplexMatrix rho = m * m.adjoint();
  rho /= rho.trace();
  return DensityMatrix::from_matrix(rho);
}

}  // namespace

int thread_budget() {
  if (const char* env = std::getenv("QFIT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

QuantumFitConfig RunConfig::fit_config() const {
  QuantumFitConfig cfg;
  cfg.epsilon = epsilon;
  cfg.confidence_delta = 1.0 - confidence;
  if (backend == "spectral") {
    cfg.backend = Backend::Spectral;
  } else if (backend == "channel") {
    cfg.backend = Backend::Channel;
  } else {
    throw Error(ErrorCode::ParseError, "unknown backend: " + backend);
  }
  if (!sign_backend.empty()) {
    if (sign_backend == "spectral") {
      cfg.sign_backend = Backend::Spectral;
    } else if (sign_backend == "channel") {
      cfg.sign_backend = Backend::Channel;
    } else {
      throw Error(ErrorCode::ParseError,
                  "unknown sign-backend: " + sign_backend);
    }
  }
  if (pe_mode == "faithful") {
    cfg.pe_mode = PeMode::Faithful;
  } else if (pe_mode == "idealized") {
    cfg.pe_mode = PeMode::Idealized;
  } else {
    throw Error(ErrorCode::ParseError, "unknown pe-mode: " + pe_mode);
  }
  cfg.seed = seed;
  cfg.suzuki_order = suzuki_order;
  cfg.caps = caps;
  cfg.validate();
  return cfg;
}

Json RunConfig::echo() const {
  return Json{{"matrix", matrix_path},
              {"response", response_path},
              {"estimator", estimator},
              {"epsilon", epsilon},
              {"confidence", confidence},
              {"backend", backend},
              {"sign_backend", sign_backend.empty() ? backend : sign_backend},
              {"pe_mode", pe_mode},
              {"seed", seed},
              {"suzuki_order", suzuki_order},
              {"out", out_path},
              {"bound_a", bound_a},
              {"bound_b", bound_b},
              {"caps",
               {{"channel_steps", caps.channel_steps},
                {"ae_applications", caps.ae_applications},
                {"pe_bits_spectral", caps.pe_bits_spectral},
                {"pe_bits_statevec", caps.pe_bits_statevec},
                {"pe_bits_channel", caps.pe_bits_channel}}}};
}

FitProblem load_problem(const std::string& matrix_csv,
                        const std::string& response_csv) {
  const RealMatrix f = parse_csv_matrix(matrix_csv);
  const RealMatrix y = parse_csv_matrix(response_csv);
  if (y.cols() != 1) {
    throw Error(ErrorCode::ParseError,
                response_csv + ": response must be a single column, got " +
                    std::to_string(y.cols()));
  }
  if (f.rows() != y.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "matrix has " + std::to_string(f.rows()) +
                    " rows, response has " + std::to_string(y.rows()));
  }
  return normalize_problem(f, y.col(0));
}

RunResult run(const RunConfig& config) {
  const auto start = Clock::now();
  const QuantumFitConfig fit_cfg = config.fit_config();
  FitProblem p = load_problem(config.matrix_path, config.response_path);
  if (config.bound_a > 0.0) {
    p = normalize_problem(p.F, p.y, config.bound_a, config.bound_b);
  }
  QuantumFitEngine engine(p, fit_cfg);
  const ClassicalFit& fit = engine.classical();

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["kind"] = "run";
  report["config"] = config.echo();
  report["problem"] = problem_json(p, fit);
  report["classical"] = classical_json(fit);

  Rng rng(config.seed);
  const int rounds = boost_rounds_for_failure(fit_cfg.confidence_delta);
  Json estimates;

  if (config.estimator == "phi") {
    Rng sub = rng.fork(1);
    const EstimationOutcome out = boost_median(
        [&](Rng& r) { return engine.estimate_phi(config.epsilon, r); },
        rounds, sub);
    Json j = outcome_json(out);
    j["deviation_from_classical"] = std::abs(out.value - fit.phi);
    estimates["phi"] = j;
  } else if (config.estimator == "norm") {
    Rng sub = rng.fork(2);
    const EstimationOutcome out = boost_median(
        [&](Rng& r) { return engine.estimate_theta_norm(config.epsilon, r); },
        rounds, sub);
    Json j = outcome_json(out);
    j["deviation_from_classical"] =
        fit.theta_norm > 0.0
            ? std::abs(out.value - fit.theta_norm) / fit.theta_norm
            : 0.0;
    estimates["theta_norm"] = j;
  } else if (config.estimator == "theta") {
    Rng sub = rng.fork(3);
    std::vector<EntryEstimate> entries;
    const RealVector est = engine.estimate_theta_bar_full(
        config.epsilon, sub, fit_cfg.confidence_delta, &entries);
    Json j;
    j["value"] = std::vector<double>(est.data(), est.data() + est.size());
    j["target_error"] = config.epsilon;
    j["deviation_from_classical"] = (est - fit.theta_bar).norm();
    Json per_entry = Json::array();
    for (const auto& e : entries) {
      per_entry.push_back({{"magnitude", e.magnitude},
                           {"sign", e.sign},
                           {"below_threshold", e.below_threshold}});
    }
    j["per_entry"] = per_entry;
    estimates["theta_bar"] = j;
  } else if (config.estimator == "full") {
    const FitEstimate est = engine.full_fit(rng);
    Json phi_j = outcome_json(est.phi);
    phi_j["deviation_from_classical"] = est.phi_deviation;
    estimates["phi"] = phi_j;
    Json norm_j = outcome_json(est.theta_norm);
    norm_j["deviation_from_classical"] = est.theta_norm_relative_error;
    estimates["theta_norm"] = norm_j;
    Json theta_j;
    theta_j["value"] =
        std::vector<double>(est.theta_hat.data(),
                            est.theta_hat.data() + est.theta_hat.size());
    theta_j["target_error"] = config.epsilon;
    theta_j["deviation_from_classical"] = est.theta_error;
    Json per_entry = Json::array();
    for (const auto& e : est.per_entry) {
      per_entry.push_back({{"magnitude", e.magnitude},
                           {"sign", e.sign},
                           {"below_threshold", e.below_threshold}});
    }
    theta_j["per_entry"] = per_entry;
    estimates["theta"] = theta_j;
    Json bar_j;
    bar_j["value"] = std::vector<double>(
        est.theta_bar_hat.data(),
        est.theta_bar_hat.data() + est.theta_bar_hat.size());
    bar_j["target_error"] = config.epsilon;
    bar_j["deviation_from_classical"] = est.theta_bar_error;
    estimates["theta_bar"] = bar_j;
  } else {
    throw Error(ErrorCode::ParseError,
                "unknown estimator: " + config.estimator);
  }

  report["estimates"] = estimates;
  report["cost"] = cost_json(engine.cost_snapshot());
  report["wall_clock_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                Clock::now() - start)
                                .count();
  return {report, 0};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

Json sweep_dme_scaling(Rng& rng, bool* pass) {
  const std::vector<double> xs = {0.2, 0.1, 0.05, 0.025, 0.0125};
  std::vector<double> errs(xs.size(), 0.0);
  std::vector<double> trial_slopes;
  const int pairs = 20;
  for (int t = 0; t < pairs; ++t) {
    Rng sub = rng.fork(t);
    const Index dim = 2 + static_cast<Index>(sub.integer(2));
    const DensityMatrix rho = random_density(dim, sub);
    const DensityMatrix sigma = random_density(dim, sub);
    std::vector<double> trial_errs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const ComplexMatrix got =
          dme_step(rho, xs[i]).apply_raw(sigma.matrix());
      const ComplexMatrix u = herm_exp(rho.matrix(), xs[i]);
      trial_errs[i] = trace_distance(got, u * sigma.matrix() * u.adjoint());
      errs[i] += trial_errs[i];
    }
    trial_slopes.push_back(loglog_slope(xs, trial_errs));
  }
  const double slope = loglog_slope(xs, errs);
  const Json slope_ci = slope_interval(trial_slopes);

  Json budget_points = Json::array();
  bool budget_pass = true;
  for (double eps : {0.04, 0.02, 0.01}) {
    double worst = 0.0;
    Rng sub = rng.fork(static_cast<std::uint64_t>(1e4 * eps));
    for (int t = 0; t < 4; ++t) {
      const Index dim = 2 + static_cast<Index>(sub.integer(2));
      const DensityMatrix rho = random_density(dim, sub);
      const Channel chan = dme_simulate(rho, 1.0, eps);
      worst =
          std::max(worst, measured_distance(chan, herm_exp(rho.matrix(), 1.0)));
    }
    budget_pass = budget_pass && worst <= eps;
    budget_points.push_back({{"eps", eps}, {"measured_error", worst}});
  }

  *pass = std::abs(slope - 2.0) <= 0.2 && budget_pass;
  Json points = Json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    points.push_back({{"x", xs[i]}, {"mean_error", errs[i] / pairs}});
  }
  return Json{{"kind", "dme_scaling"},
              {"points", points},
              {"slope", slope},
              {"slope_ci", slope_ci},
              {"expected_slope", 2.0},
              {"tolerance", 0.2},
              {"budget_points", budget_points},
              {"budget_pass", budget_pass}};
}

Json sweep_suzuki_scaling(Rng& rng, bool* pass) {
  Json orders = Json::array();
  *pass = true;
  for (int k : {1, 2}) {
    const std::vector<double> xs = {0.4, 0.2, 0.1};
    std::vector<double> errs(xs.size(), 0.0);
    std::vector<double> trial_slopes;
    const int pairs = 8;
    for (int t = 0; t < pairs; ++t) {
      Rng sub = rng.fork(100 * k + t);
      const ComplexMatrix a = random_hermitian(4, sub, 1.0);
      const ComplexMatrix b = random_hermitian(4, sub, 1.0);
      std::vector<double> trial_errs(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        ComplexMatrix prod = ComplexMatrix::Identity(4, 4);
        for (const auto& f : suzuki_factors(k, xs[i])) {
          prod = prod * herm_exp(f.plus ? a : b, f.time);
        }
        trial_errs[i] = operator_norm(herm_exp(a + b, xs[i]) - prod);
        errs[i] += trial_errs[i];
      }
      trial_slopes.push_back(loglog_slope(xs, trial_errs));
    }
    const double slope = loglog_slope(xs, errs);
    const double expected = 2.0 * k + 1.0;
    const double tol = k == 1 ? 0.3 : 0.5;
    *pass = *pass && std::abs(slope - expected) <= tol;
    Json points = Json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      points.push_back({{"x", xs[i]}, {"mean_error", errs[i] / pairs}});
    }
    orders.push_back({{"order", k},
                      {"points", points},
                      {"slope", slope},
                      {"slope_ci", slope_interval(trial_slopes)},
                      {"expected_slope", expected},
                      {"tolerance", tol}});
  }
  return Json{{"kind", "suzuki_scaling"}, {"orders", orders}};
}

Json sweep_pe_concentration(bool* pass) {
  constexpr double kBound = 8.0 / (std::numbers::pi * std::numbers::pi);
  Json points = Json::array();
  double min_mass = 1.0;
  for (int bits : {4, 6, 8}) {
    const long long M = 1LL << bits;
    const double bin = 2.0 * std::numbers::pi / static_cast<double>(M);
    for (int g = 0; g < 32; ++g) {
      const double theta = 2.0 * std::numbers::pi * (g + 0.37) / 32.0;
      double mass = 0.0;
      for (long long k = 0; k < M; ++k) {
        double dist = std::abs(theta - bin * static_cast<double>(k));
        dist = std::min(dist, 2.0 * std::numbers::pi - dist);
        if (dist <= bin + 1e-15) mass += pe_prob(theta, M, k);
      }
      min_mass = std::min(min_mass, mass);
    }
    points.push_back({{"bits", bits}, {"min_one_bin_mass", min_mass}});
  }
  const bool zero_exact = pe_prob(0.0, 256, 0) == 1.0;
  *pass = min_mass >= kBound - 1e-6 && zero_exact;
  return Json{{"kind", "pe_concentration"},
              {"points", points},
              {"min_mass", min_mass},
              {"bound", kBound},
              {"zero_phase_exact", zero_exact}};
}

Json sweep_ae_contract(Rng& rng, bool* pass) {
  const std::vector<double> ps = {0.1, 0.25, 0.5, 0.9};
  const std::vector<double> epss = {0.1, 0.05};
  const int trials = 1000;
  const int threshold = binomial_pass_threshold(trials, 2.0 / 3.0, 0.95);

  struct Cell {
    double p, eps;
    std::uint64_t salt;
    int additive_hits = 0, multiplicative_hits = 0;
  };
  std::vector<Cell> grid;
  std::uint64_t salt = 0;
  for (double p : ps) {
    for (double eps : epss) grid.push_back({p, eps, salt++});
  }

  // Cells are independent given their pre-forked seeds; run them on the
  // configured thread budget.
  const Rng base = rng;
  auto run_cell = [&base, trials](Cell& cell) {
    for (int t = 0; t < trials; ++t) {
      Rng add_rng = base.fork(cell.salt * 1000003ULL + t);
      if (std::abs(amplitude_estimate_additive(cell.p, cell.eps, add_rng)
                       .value -
                   cell.p) <= cell.eps) {
        ++cell.additive_hits;
      }
      Rng mul_rng = base.fork((cell.salt + 500) * 1000003ULL + t);
      if (std::abs(
              amplitude_estimate_multiplicative(cell.p, cell.eps, mul_rng)
                  .value -
              cell.p) <= cell.eps * cell.p) {
        ++cell.multiplicative_hits;
      }
    }
  };
  const int threads = std::min<int>(thread_budget(), grid.size());
  if (threads <= 1) {
    for (auto& cell : grid) run_cell(cell);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < grid.size();
             i = next.fetch_add(1)) {
          run_cell(grid[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  Json cells = Json::array();
  *pass = true;
  for (const auto& cell : grid) {
    const bool cell_pass = cell.additive_hits >= threshold &&
                           cell.multiplicative_hits >= threshold;
    *pass = *pass && cell_pass;
    cells.push_back({{"p", cell.p},
                     {"eps", cell.eps},
                     {"additive_hits", cell.additive_hits},
                     {"multiplicative_hits", cell.multiplicative_hits},
                     {"trials", trials},
                     {"threshold", threshold},
                     {"pass", cell_pass}});
  }
  return Json{{"kind", "ae_contract"},
              {"cells", cells},
              {"threshold", threshold}};
}

}  // namespace

RunResult run_sweep(const std::string& kind, const RunConfig& config) {
  const auto start = Clock::now();
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["kind"] = "sweep";
  report["config"] = config.echo();

  Rng rng(config.seed);
  bool pass = false;
  if (kind == "dme_scaling") {
    report["sweep"] = sweep_dme_scaling(rng, &pass);
  } else if (kind == "suzuki_scaling") {
    report["sweep"] = sweep_suzuki_scaling(rng, &pass);
  } else if (kind == "pe_concentration") {
    report["sweep"] = sweep_pe_concentration(&pass);
  } else if (kind == "ae_contract") {
    report["sweep"] = sweep_ae_contract(rng, &pass);
  } else {
    throw Error(ErrorCode::ParseError, "unknown sweep kind: " + kind);
  }
  report["sweep"]["pass"] = pass;
  report["wall_clock_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                Clock::now() - start)
                                .count();
  return {report, pass ? 0 : 5};
}

// ---------------------------------------------------------------------------
// Property-suite checks
// ---------------------------------------------------------------------------

RunResult run_check(const RunConfig& config) {
  const auto start = Clock::now();
  Json suites = Json::array();
  bool all_pass = true;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    suites.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    all_pass = all_pass && pass;
  };

  Rng rng(config.seed);
  {
    bool ok = true;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      Rng sub = rng.fork(t);
      const Index dim = 2 + static_cast<Index>(sub.integer(7));
      const ComplexMatrix a = random_hermitian(dim, sub, sub.uniform(0.1, 3.0));
      const ComplexMatrix b = random_hermitian(dim, sub, sub.uniform(0.1, 3.0));
      const double slack = operator_norm(herm_exp(a, 1.0) - herm_exp(b, 1.0)) -
                           operator_norm(a - b);
      worst = std::max(worst, slack);
      ok = ok && slack <= 1e-12;
    }
    add("exponential_difference_bound", ok, "max slack " + std::to_string(worst));
  }
  {
    bool ok = true;
    for (int bits : {3, 5, 8}) {
      const long long M = 1LL << bits;
      for (double frac : {0.13, 0.5, 0.92}) {
        long double sum = 0.0L;
        for (long long k = 0; k < M; ++k) {
          sum += pe_prob(2.0 * std::numbers::pi * frac, M, k);
        }
        ok = ok && std::abs(static_cast<double>(sum) - 1.0) <= 1e-10;
      }
    }
    ok = ok && pe_prob(0.0, 64, 0) == 1.0;
    add("pe_distribution_normalized", ok, "");
  }
  {
    const double p = std::pow(std::sin(3.0 * std::numbers::pi / 8.0), 2);
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      Rng sub = rng.fork(1000 + t);
      ok = ok && std::abs(amplitude_estimate_additive(
                              p, std::numbers::pi / 8.0, sub)
                              .value -
                          p) <= 1e-12;
    }
    add("ae_exact_on_grid", ok, "");
  }
  {
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      Rng sub = rng.fork(2000 + t);
      const DensityMatrix a = random_density(3, sub);
      const DensityMatrix b = random_density(3, sub);
      const DensityMatrix c = random_density(3, sub);
      ok = ok && trace_distance(a, c) <=
                     trace_distance(a, b) + trace_distance(b, c) + 1e-9;
    }
    add("trace_distance_triangle", ok, "");
  }
  {
    bool ok = true;
    for (int t = 0; t < 10; ++t) {
      Rng sub = rng.fork(3000 + t);
      const DensityMatrix rho = random_density(6, sub);
      ok = ok && std::abs(partial_trace(rho, 2, 3, Subsystem::First)
                              .matrix()
                              .trace()
                              .real() -
                          1.0) <= 1e-10;
    }
    add("partial_trace_preserves_trace", ok, "");
  }
  {
    RealMatrix f(4, 2);
    f << 1, 0, 0, 1, 1, 0, 0, -1;
    RealVector y(4);
    y << 1, 0.5, 0.3, -0.2;
    const FitProblem p = normalize_problem(f, y);
    const ClassicalFit fit = classical_fit(p);
    const SignGadget g = build_sign_gadget(p, fit.theta_norm);
    const RealMatrix gram = g.G.transpose() * g.G;
    bool ok =
        (gram - RealMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() <=
        1e-12;
    const ClassicalFit aug = classical_fit(g.augmented);
    ok = ok &&
         std::abs(aug.theta_bar(2) - 1.0 / std::sqrt(2.0)) <= 1e-9;
    add("sign_gadget_structure", ok, "");
  }
  {
    Rng sub = rng.fork(4000);
    const DensityMatrix rho = random_density(2, sub);
    const Channel chan = dme_step(rho, 0.4);
    const bool ok =
        (chan.apply(rho).matrix() - rho.matrix()).cwiseAbs().maxCoeff() <=
        1e-12;
    add("dme_fixed_point", ok, "");
  }

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["kind"] = "check";
  report["config"] = config.echo();
  report["suites"] = suites;
  report["all_pass"] = all_pass;
  report["wall_clock_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                Clock::now() - start)
                                .count();
  return {report, all_pass ? 0 : 5};
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

bool validate_report(const Json& report, std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return false;
  };
  if (!report.is_object()) return fail("report is not an object");
  for (const char* key : {"schema_version", "kind", "config", "wall_clock_ms"}) {
    if (!report.contains(key)) return fail(std::string("missing ") + key);
  }
  if (report["schema_version"] != kSchemaVersion) {
    return fail("unknown schema version");
  }
  const std::string kind = report["kind"];
  if (kind == "run") {
    for (const char* key : {"problem", "classical", "estimates", "cost"}) {
      if (!report.contains(key)) return fail(std::string("missing ") + key);
    }
    for (const char* key : {"n", "d", "kappa", "nu", "chi", "phi_classical"}) {
      if (!report["problem"].contains(key)) {
        return fail(std::string("problem missing ") + key);
      }
    }
    if (!report["estimates"].is_object() || report["estimates"].empty()) {
      return fail("estimates empty");
    }
    for (const auto& [name, est] : report["estimates"].items()) {
      for (const char* key :
           {"value", "target_error", "deviation_from_classical"}) {
        if (!est.contains(key)) {
          return fail("estimate " + name + " missing " + key);
        }
      }
    }
  } else if (kind == "sweep") {
    if (!report.contains("sweep")) return fail("missing sweep");
    for (const char* key : {"kind", "pass"}) {
      if (!report["sweep"].contains(key)) {
        return fail(std::string("sweep missing ") + key);
      }
    }
  } else if (kind == "check") {
    if (!report.contains("suites") || !report["suites"].is_array()) {
      return fail("missing suites");
    }
    for (const auto& suite : report["suites"]) {
      if (!suite.contains("name") || !suite.contains("pass")) {
        return fail("suite entry missing name/pass");
      }
    }
  } else {
    return fail("unknown report kind: " + kind);
  }
  return true;
}

void write_report(const Json& report, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) {
      throw Error(ErrorCode::ParseError, "cannot write " + tmp);
    }
    out << report.dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::ParseError, "cannot rename " + tmp + " to " + path);
  }
}

}  // namespace qfit::cli
