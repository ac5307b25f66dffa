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

#include <CLI11.hpp>

#include <iostream>

#include "qfit/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, qfit::cli::RunConfig* config,
                        std::string* caps_spec) {
  cmd->add_option("--epsilon", config->epsilon, "Target error");
  cmd->add_option("--confidence", config->confidence,
                  "Overall success probability target");
  cmd->add_option("--backend", config->backend, "spectral | channel")
      ->check(CLI::IsMember({"spectral", "channel"}));
  cmd->add_option("--sign-backend", config->sign_backend,
                  "Backend for sign determination (defaults to --backend)")
      ->check(CLI::IsMember({"spectral", "channel"}));
  cmd->add_option("--pe-mode", config->pe_mode, "idealized | faithful")
      ->check(CLI::IsMember({"idealized", "faithful"}));
  cmd->add_option("--seed", config->seed, "Root RNG seed");
  cmd->add_option("--bound-a", config->bound_a,
                  "Loosened lower singular-value bound (0: exact)");
  cmd->add_option("--bound-b", config->bound_b,
                  "Loosened upper singular-value bound (0: exact)");
  cmd->add_option("--suzuki-order", config->suzuki_order,
                  "Product-formula order index k");
  cmd->add_option("--out", config->out_path, "Report output path");
  cmd->add_option("--caps", *caps_spec,
                  "Resource caps as CHANNEL_STEPS,AE_APPLICATIONS");
}

void apply_caps(const std::string& spec, qfit::cli::RunConfig* config) {
  if (spec.empty()) return;
  const auto comma = spec.find(',');
  try {
    if (comma == std::string::npos) {
      config->caps.channel_steps = std::stoll(spec);
    } else {
      config->caps.channel_steps = std::stoll(spec.substr(0, comma));
      config->caps.ae_applications = std::stoll(spec.substr(comma + 1));
    }
  } catch (const std::exception&) {
    throw qfit::Error(qfit::ErrorCode::ParseError,
                      "bad --caps value: " + spec);
  }
}

int emit(const qfit::cli::RunResult& result, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << result.report.dump(2) << "\n";
  } else {
    qfit::cli::write_report(result.report, out_path);
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qfit: estimator simulator for least-squares curve fitting"};
  app.require_subcommand(1);

  qfit::cli::RunConfig config;
  std::string caps_spec;
  std::string sweep_kind;

  CLI::App* run_cmd = app.add_subcommand("run", "Run estimators on a problem");
  run_cmd->add_option("--matrix", config.matrix_path, "Design matrix CSV")
      ->required();
  run_cmd->add_option("--response", config.response_path, "Response CSV")
      ->required();
  run_cmd->add_option("--estimator", config.estimator,
                      "phi | norm | theta | full")
      ->check(CLI::IsMember({"phi", "norm", "theta", "full"}));
  add_common_options(run_cmd, &config, &caps_spec);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Scaling and contract sweeps");
  sweep_cmd
      ->add_option("--kind", sweep_kind,
                   "dme_scaling | suzuki_scaling | pe_concentration | "
                   "ae_contract")
      ->required()
      ->check(CLI::IsMember({"dme_scaling", "suzuki_scaling",
                             "pe_concentration", "ae_contract"}));
  add_common_options(sweep_cmd, &config, &caps_spec);

  CLI::App* check_cmd = app.add_subcommand("check", "Property suites");
  add_common_options(check_cmd, &config, &caps_spec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    apply_caps(caps_spec, &config);
    if (run_cmd->parsed()) {
      return emit(qfit::cli::run(config), config.out_path);
    }
    if (sweep_cmd->parsed()) {
      return emit(qfit::cli::run_sweep(sweep_kind, config), config.out_path);
    }
    return emit(qfit::cli::run_check(config), config.out_path);
  } catch (const qfit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qfit::exit_class(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
