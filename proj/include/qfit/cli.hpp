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

#pragma once

#include <json.hpp>

#include <string>

#include "qfit/fitalgs.hpp"

namespace qfit::cli {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

/// Everything a run needs; a report is reproducible from (RunConfig, input
/// files) alone.
struct RunConfig {
  std::string matrix_path;
  std::string response_path;
  std::string estimator = "full";  // phi | norm | theta | full
  double epsilon = 0.1;
  double confidence = 0.9;  // overall success probability target
  std::string backend = "spectral";
  std::string sign_backend;  // empty: follow backend
  std::string pe_mode = "faithful";
  std::uint64_t seed = 0;
  int suzuki_order = 1;
  std::string out_path;  // empty: write to stdout
  ResourceCaps caps;
  // Loosened singular-value bounds (0 = use the exact extremes). Widening
  // [a, b] stress-tests the estimators' error budgets.
  double bound_a = 0.0;
  double bound_b = 0.0;

  QuantumFitConfig fit_config() const;
  Json echo() const;
};

/// Loads and normalizes a problem from headerless CSV inputs. Parse errors
/// carry the offending line number.
FitProblem load_problem(const std::string& matrix_csv,
                        const std::string& response_csv);

struct RunResult {
  Json report;
  int exit_code = 0;
};

/// Executes the selected estimator and assembles the report. Deterministic
/// given (config, inputs).
RunResult run(const RunConfig& config);

/// Scaling and contract sweeps: dme_scaling, suzuki_scaling,
/// pe_concentration, ae_contract. Emits per-point measurements and fitted
/// slopes.
RunResult run_sweep(const std::string& kind, const RunConfig& config);

/// Fast property suites over the library primitives; exit code 5 when any
/// suite fails.
RunResult run_check(const RunConfig& config);

/// Structural validation against the shipped report schema.
bool validate_report(const Json& report, std::string* error = nullptr);

/// Writes through a temp file and renames, so readers never see a torn file.
void write_report(const Json& report, const std::string& path);

/// Thread budget: QFIT_THREADS when set, hardware concurrency otherwise.
int thread_budget();

}  // namespace qfit::cli
