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
//
// End-to-end acceptance suite. Every test prints one line:
//   [ACCEPTANCE] <nn> <description>: PASS|FAIL (<elapsed>)
// and enforces its runtime budget.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "qfit/cli.hpp"
#include "qfit/fitalgs.hpp"
#include "qfit/hamsim.hpp"
#include "testutil.hpp"

namespace qfit {
namespace {

class Criterion {
 public:
  Criterion(int number, std::string description, double budget_seconds)
      : number_(number),
        description_(std::move(description)),
        budget_(budget_seconds),
        start_(std::chrono::steady_clock::now()) {}

  void finish(bool pass) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    std::printf("[ACCEPTANCE] %02d %-52s %s (%.1fs, budget %.0fs)\n", number_,
                description_.c_str(), pass ? "PASS" : "FAIL", elapsed,
                budget_);
    std::fflush(stdout);
    EXPECT_TRUE(pass) << "criterion " << number_;
    EXPECT_LE(elapsed, budget_) << "criterion " << number_ << " runtime";
  }

 private:
  int number_;
  std::string description_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
};

FitProblem orthonormal_instance(Index d, const RealVector& coeffs,
                                double phi) {
  const Index n = 2 * d;
  RealMatrix f = RealMatrix::Zero(n, d);
  for (Index j = 0; j < d; ++j) {
    f(2 * j, j) = 1.0;
    f(2 * j + 1, j) = 1.0;
  }
  f /= f.norm();
  RealVector y = f * coeffs;
  y /= y.norm();
  if (phi < 1.0) {
    RealVector resid = RealVector::Zero(n);
    resid(0) = 1.0;
    resid(1) = -1.0;
    resid /= resid.norm();
    y = std::sqrt(phi) * y + std::sqrt(1.0 - phi) * resid;
  }
  return normalize_problem(f, y);
}

TEST(Acceptance, Criterion01ClassicalOracleIdentities) {
  Criterion crit(1, "classical-oracle identities on 200 random problems", 10);
  Rng rng(101);
  bool pass = true;
  const std::vector<Index> ns = {4, 8, 16, 32};
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = ns[trial % ns.size()];
    const Index d = 1 + static_cast<Index>(rng.integer(4));
    const FitProblem p = test::random_problem(n, d, rng, 50.0);
    const ClassicalFit fit = classical_fit(p);
    pass = pass &&
           (p.F.transpose() * p.F * fit.theta_hat - p.F.transpose() * p.y)
                   .norm() <= 1e-9;
    pass = pass && std::abs(fit.y_hat.dot(fit.residual)) <= 1e-10;
    pass = pass && std::abs(fit.E_hat - (1.0 - fit.phi)) <= 1e-10;
    pass = pass && check_bounds(p).all_pass;
  }
  crit.finish(pass);
}

TEST(Acceptance, Criterion02RowDiscretization) {
  Criterion crit(2, "row discretization error <= 2 gamma, buckets sum to M",
                 5);
  Rng rng(102);
  bool pass = true;
  for (double gamma : {0.1, 0.05, 0.025}) {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const Index d = 1 + static_cast<Index>(rng.integer(4));
      const Index n = std::max<Index>(4, d);
      const FitProblem p = test::random_problem(n, d, rng);
      const Index row = static_cast<Index>(rng.integer(n));
      const DiscretizedRow disc = discretize_row(p, row, gamma);
      long long total = 0;
      for (long long z : disc.bucket_sizes) total += z;
      pass = pass && total == disc.bucket_count;
      worst = std::max(worst, disc.error(p));
    }
    pass = pass && worst <= 2.0 * gamma;
  }
  crit.finish(pass);
}

TEST(Acceptance, Criterion03DmeStepScaling) {
  Criterion crit(3, "DME step-error slope 2 +- 0.2 and budget compliance",
                 60);
  cli::RunConfig config;
  config.seed = 103;
  const cli::RunResult result = cli::run_sweep("dme_scaling", config);
  crit.finish(result.report["sweep"]["pass"].get<bool>());
}

TEST(Acceptance, Criterion04ExponentialDifferenceBound) {
  Criterion crit(4, "||e^{iA}-e^{iB}|| <= ||A-B|| on 100 Hermitian pairs", 5);
  Rng rng(104);
  bool pass = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Index dim = 2 + static_cast<Index>(rng.integer(7));
    const ComplexMatrix a =
        test::random_hermitian(dim, rng, rng.uniform(0.1, 3.0));
    const ComplexMatrix b =
        test::random_hermitian(dim, rng, rng.uniform(0.1, 3.0));
    const double lhs = operator_norm(herm_exp(a, 1.0) - herm_exp(b, 1.0));
    pass = pass && lhs <= operator_norm(a - b) + 1e-12;
  }
  crit.finish(pass);
}

TEST(Acceptance, Criterion05SuzukiScaling) {
  Criterion crit(5, "Suzuki slopes 3 +- 0.3 (S2) and 5 +- 0.5 (S4)", 30);
  cli::RunConfig config;
  config.seed = 105;
  const cli::RunResult result = cli::run_sweep("suzuki_scaling", config);
  crit.finish(result.report["sweep"]["pass"].get<bool>());
}

TEST(Acceptance, Criterion06PhaseEstimationConcentration) {
  Criterion crit(6, "PE one-bin mass >= 8/pi^2; exact zero phase to bin 0",
                 5);
  cli::RunConfig config;
  const cli::RunResult result = cli::run_sweep("pe_concentration", config);
  crit.finish(result.report["sweep"]["pass"].get<bool>());
}

TEST(Acceptance, Criterion07AmplitudeEstimationContracts) {
  Criterion crit(7, "AE additive and multiplicative contracts (2/3, 95%)",
                 60);
  cli::RunConfig config;
  config.seed = 107;
  const cli::RunResult result = cli::run_sweep("ae_contract", config);
  crit.finish(result.report["sweep"]["pass"].get<bool>());
}

TEST(Acceptance, Criterion08FitQualityEndToEnd) {
  Criterion crit(8, "fit-quality estimator within 0.05 on >=90% instances",
                 120);
  Rng rng(108);
  const double eps = 0.05;
  int hits = 0;
  const int instances = 20;
  const int rounds = 15;
  for (int i = 0; i < instances; ++i) {
    const Index n = std::vector<Index>{4, 8, 16}[i % 3];
    const Index d = 1 + static_cast<Index>(rng.integer(3));
    const FitProblem p = test::random_problem(n, d, rng, 10.0);
    QuantumFitConfig cfg;
    cfg.backend = Backend::Spectral;
    cfg.pe_mode = PeMode::Faithful;
    QuantumFitEngine engine(p, cfg);
    Rng run_rng(1000 + i);
    const EstimationOutcome out = boost_median(
        [&](Rng& r) { return engine.estimate_phi(eps, r); }, rounds, run_rng);
    if (std::abs(out.value - engine.classical().phi) <= eps) ++hits;
  }
  crit.finish(hits >= 18);
}

TEST(Acceptance, Criterion09NormEndToEnd) {
  Criterion crit(9, "norm estimator: raw >= 2/3 per instance, boosted >= 90%",
                 180);
  Rng rng(109);
  const double eps = 0.1;
  bool pass = true;
  int boosted_hits = 0;
  int boosted_total = 0;
  int made = 0;
  while (made < 20) {
    const Index n = std::vector<Index>{4, 8, 16}[made % 3];
    const Index d = 1 + static_cast<Index>(rng.integer(3));
    const FitProblem p = test::random_problem(n, d, rng, 10.0);
    const ClassicalFit fit = classical_fit(p);
    if (fit.phi < 0.2) continue;
    ++made;
    QuantumFitConfig cfg;
    cfg.backend = Backend::Spectral;
    cfg.pe_mode = PeMode::Faithful;
    QuantumFitEngine engine(p, cfg);

    int raw_hits = 0;
    const int raw_runs = 15;
    for (int run = 0; run < raw_runs; ++run) {
      Rng run_rng(2000 + 100 * made + run);
      const double est = engine.estimate_theta_norm(eps, run_rng).value;
      if (std::abs(est - fit.theta_norm) <= eps * fit.theta_norm) ++raw_hits;
    }
    pass = pass && raw_hits * 3 >= raw_runs * 2;

    const int boosted_runs = 10;
    for (int run = 0; run < boosted_runs; ++run) {
      Rng run_rng(3000 + 100 * made + run);
      const EstimationOutcome out = boost_median(
          [&](Rng& r) { return engine.estimate_theta_norm(eps, r); }, 15,
          run_rng);
      ++boosted_total;
      if (std::abs(out.value - fit.theta_norm) <= eps * fit.theta_norm) {
        ++boosted_hits;
      }
    }
  }
  pass = pass && boosted_hits * 10 >= boosted_total * 9;
  crit.finish(pass);
}

TEST(Acceptance, Criterion10DirectionEndToEnd) {
  Criterion crit(10, "direction estimator: l2 <= 0.2 in >= 2/3 runs, signs",
                 600);
  Rng rng(110);
  const double eps = 0.2;
  bool pass = true;
  for (int i = 0; i < 10; ++i) {
    const Index d = 2 + static_cast<Index>(i % 3);
    // Mixed-sign direction with every entry comfortably above 0.1.
    RealVector coeffs(d);
    for (Index j = 0; j < d; ++j) {
      coeffs(j) = (j % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.2 * rng.uniform());
    }
    const double phi = 0.5 + 0.4 * rng.uniform();
    const FitProblem p = orthonormal_instance(d, coeffs, phi);
    const ClassicalFit fit = classical_fit(p);
    ASSERT_GE(fit.phi, 0.3);
    for (Index j = 0; j < d; ++j) {
      ASSERT_GE(std::abs(fit.theta_bar(j)), 0.2);
    }

    QuantumFitConfig cfg;
    cfg.backend = Backend::Spectral;
    cfg.pe_mode = PeMode::Faithful;
    QuantumFitEngine engine(p, cfg);

    int l2_hits = 0;
    const int runs = 9;
    for (int run = 0; run < runs; ++run) {
      Rng run_rng(4000 + 100 * i + run);
      const RealVector est = engine.estimate_theta_bar_full(eps, run_rng);
      const double err = (est - fit.theta_bar).norm();
      if (err <= eps) {
        ++l2_hits;
        // Within tolerance, every entry above the sign threshold must carry
        // the right sign.
        for (Index j = 0; j < d; ++j) {
          if (std::abs(fit.theta_bar(j)) >= 0.1) {
            pass = pass && est(j) * fit.theta_bar(j) > 0.0;
          }
        }
      }
    }
    pass = pass && l2_hits * 3 >= runs * 2;
  }
  crit.finish(pass);
}

TEST(Acceptance, Criterion11ChannelBackendConsistency) {
  Criterion crit(11, "channel-backend fit quality within 0.1 of spectral",
                 600);
  RealMatrix f(4, 2);
  f << 1, 0, 0, 1, 1, 0, 0, -1;
  RealVector y(4);
  y << 1.0, 0.6, 0.8, -0.4;
  const FitProblem p = normalize_problem(f, y);

  const double eps = 0.05;
  const int rounds = 15;

  QuantumFitConfig spectral;
  spectral.backend = Backend::Spectral;
  spectral.epsilon = eps;
  QuantumFitEngine spectral_engine(p, spectral);
  Rng spec_rng(111);
  const double phi_spectral =
      boost_median([&](Rng& r) { return spectral_engine.estimate_phi(eps, r); },
                   rounds, spec_rng)
          .value;

  QuantumFitConfig channel;
  channel.backend = Backend::Channel;
  channel.epsilon = eps;
  channel.caps.channel_steps = 100000000;
  QuantumFitEngine channel_engine(p, channel);
  Rng chan_rng(111);
  const double phi_channel =
      boost_median([&](Rng& r) { return channel_engine.estimate_phi(eps, r); },
                   rounds, chan_rng)
          .value;

  const bool pass = std::abs(phi_channel - phi_spectral) <= 0.1 &&
                    channel_engine.cost_snapshot().dme_copies > 0;
  crit.finish(pass);
}

TEST(Acceptance, Criterion12SignGadgetStructure) {
  Criterion crit(12, "sign gadget: G^T G = I/d, |G_{i,1}|, theta'_{d+1}", 5);
  Rng rng(112);
  bool pass = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.integer(4));
    const Index n = 4 + static_cast<Index>(rng.integer(8));
    const FitProblem p = test::random_problem(std::max(n, d), d, rng);
    const ClassicalFit fit = classical_fit(p);
    const SignGadget g = build_sign_gadget(p, fit.theta_norm);

    const RealMatrix gram = g.G.transpose() * g.G;
    pass = pass &&
           (gram - RealMatrix::Identity(d, d) / static_cast<double>(d))
                   .cwiseAbs()
                   .maxCoeff() <= 1e-12;
    const double expected =
        1.0 / std::sqrt(static_cast<double>(g.G.rows() * d));
    for (Index i = 0; i < g.G.rows(); ++i) {
      pass = pass && std::abs(g.G(i, 0)) == expected;
    }
    const ClassicalFit aug = classical_fit(g.augmented);
    pass = pass &&
           std::abs(aug.theta_bar(d) - 1.0 / std::sqrt(2.0)) <= 1e-9;
  }
  crit.finish(pass);
}

TEST(Acceptance, Criterion13RunDeterminism) {
  Criterion crit(13, "repeated seeded runs byte-identical modulo timing", 60);
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("qfit_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    out << text;
    return (dir / name).string();
  };
  const std::string f = write("F.csv", "1,0\n0,1\n1,0\n0,-1\n");
  const std::string y = write("y.csv", "1\n-0.6\n1\n0.6\n");
  const std::string out = (dir / "report.json").string();

  const auto strip_timing = [](const std::string& path) {
    std::ifstream in(path);
    std::string text, line;
    while (std::getline(in, line)) {
      if (line.find("wall_clock_ms") != std::string::npos) continue;
      text += line + "\n";
    }
    return text;
  };

  const std::string cmd = std::string(QFIT_BIN) + " run --matrix " + f +
                          " --response " + y +
                          " --estimator full --epsilon 0.2 --seed 42 --out " +
                          out + " >/dev/null 2>&1";
  bool pass = std::system(cmd.c_str()) == 0;
  const std::string first = strip_timing(out);
  pass = pass && std::system(cmd.c_str()) == 0;
  const std::string second = strip_timing(out);
  pass = pass && !first.empty() && first == second;
  fs::remove_all(dir);
  crit.finish(pass);
}

}  // namespace
}  // namespace qfit
