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

#include "qfit/problem.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

namespace qfit {
namespace {

RealMatrix column_half_half() {
  RealMatrix f(2, 1);
  f << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return f;
}

TEST(NormalizeProblem, ScalesInputs) {
  RealMatrix f(2, 1);
  f << 1.0, 1.0;
  RealVector y(2);
  y << 2.0, 0.0;
  const FitProblem p = normalize_problem(f, y);
  EXPECT_NEAR(p.F(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p.F(1, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p.y(0), 1.0, 1e-12);
  EXPECT_NEAR(p.y(1), 0.0, 1e-12);
}

TEST(NormalizeProblem, Idempotent) {
  Rng rng(2);
  const FitProblem p = test::random_problem(6, 2, rng);
  const FitProblem q = normalize_problem(p.F, p.y);
  EXPECT_LE((q.F - p.F).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((q.y - p.y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NormalizeProblem, RandomInputNormalized) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const FitProblem p = test::random_problem(8, 3, rng);
    EXPECT_NEAR((p.F.transpose() * p.F).trace(), 1.0, 1e-12);
    EXPECT_NEAR(p.y.norm(), 1.0, 1e-12);
    EXPECT_NEAR(p.a, p.spectral.singular_values(0), 1e-14);
    EXPECT_NEAR(p.b, p.spectral.singular_values(2), 1e-14);
    EXPECT_GE(p.nu, 1.0);
    EXPECT_GE(p.chi, 1.0);
    EXPECT_GE(p.kappa, 1.0);
  }
}

TEST(NormalizeProblem, LoosenedBounds) {
  Rng rng(53);
  const FitProblem exact = test::random_problem(6, 2, rng);
  const double s1 = exact.spectral.singular_values(0);
  const double s2 = exact.spectral.singular_values(1);
  const FitProblem loose =
      normalize_problem(exact.F, exact.y, s1 / 2.0, 2.0 * s2);
  EXPECT_NEAR(loose.a, s1 / 2.0, 1e-15);
  EXPECT_NEAR(loose.b, 2.0 * s2, 1e-15);
  EXPECT_NEAR(loose.kappa, 4.0 * s2 / s1, 1e-12);
  EXPECT_TRUE(check_bounds(loose).all_pass);
  // Bounds must still bracket the spectrum.
  EXPECT_THROW(normalize_problem(exact.F, exact.y, s1 * 1.5, 2.0 * s2), Error);
  EXPECT_THROW(normalize_problem(exact.F, exact.y, s1 / 2.0, s2 / 2.0), Error);
}

TEST(NormalizeProblem, Errors) {
  RealVector y(2);
  y << 1.0, 0.0;
  EXPECT_THROW(normalize_problem(RealMatrix::Zero(2, 1), y), Error);
  RealMatrix f(2, 1);
  f << 1.0, 1.0;
  EXPECT_THROW(normalize_problem(f, RealVector::Zero(2)), Error);
  RealMatrix wide(1, 2);
  wide << 1.0, 2.0;
  RealVector y1(1);
  y1 << 1.0;
  EXPECT_THROW(normalize_problem(wide, y1), Error);
}

TEST(ClassicalFit, ResponseInColumnSpace) {
  RealVector y(2);
  y << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const FitProblem p = normalize_problem(column_half_half(), y);
  const ClassicalFit fit = classical_fit(p);
  EXPECT_NEAR(fit.theta_hat(0), 1.0, 1e-12);
  EXPECT_NEAR(fit.phi, 1.0, 1e-12);
  EXPECT_NEAR(fit.E_hat, 0.0, 1e-12);
}

TEST(ClassicalFit, HalfQualityInstance) {
  // Normal equations by hand: theta = F^T y = 1/sqrt(2), phi = 1/2.
  RealVector y(2);
  y << 1.0, 0.0;
  const FitProblem p = normalize_problem(column_half_half(), y);
  const ClassicalFit fit = classical_fit(p);
  EXPECT_NEAR(fit.theta_hat(0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(fit.phi, 0.5, 1e-12);
  EXPECT_NEAR(fit.E_hat, 0.5, 1e-12);
  EXPECT_NEAR(fit.theta_norm, 1.0 / std::sqrt(2.0), 1e-12);

  // Same quality and same (sign-free) solution for the mirrored response.
  RealVector y2(2);
  y2 << 0.0, 1.0;
  const ClassicalFit fit2 = classical_fit(normalize_problem(column_half_half(), y2));
  EXPECT_NEAR(fit2.theta_hat(0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(fit2.phi, 0.5, 1e-12);
}

TEST(ClassicalFit, MatchesQrOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const FitProblem p = test::random_problem(9, 3, rng);
    const ClassicalFit fit = classical_fit(p);
    // Independent route: dense QR solve of the least-squares system.
    const RealVector oracle = p.F.colPivHouseholderQr().solve(p.y);
    EXPECT_LE((fit.theta_hat - oracle).norm(), 1e-9);
    // Normal equations residual.
    EXPECT_LE((p.F.transpose() * p.F * fit.theta_hat - p.F.transpose() * p.y)
                  .norm(),
              1e-9);
    // y_hat is the projection onto col(F), orthogonal to the residual.
    const RealMatrix u = p.spectral.left_vectors;
    EXPECT_LE((fit.y_hat - u * u.transpose() * p.y).norm(), 1e-9);
    EXPECT_NEAR(fit.y_hat.dot(fit.residual), 0.0, 1e-10);
    EXPECT_NEAR(fit.E_hat, (1.0 - fit.phi) * p.y.squaredNorm(), 1e-10);
  }
}

TEST(SignGadget, TwoByOneHadamard) {
  RealVector y(2);
  y << 1.0, 0.0;
  const FitProblem p = normalize_problem(column_half_half(), y);
  const SignGadget g = build_sign_gadget(p, 1.0);
  // n=2, d=1: G column norm 1/sqrt(d)=1, entries +-1/sqrt(2) = 1/sqrt(nd).
  EXPECT_NEAR(g.G.col(0).norm(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(g.G(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(std::abs(g.G(1, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR((g.F_prime.transpose() * g.F_prime).trace(), 1.0, 1e-12);
  EXPECT_NEAR(g.y_prime.norm(), 1.0, 1e-12);
}

TEST(SignGadget, ColumnOrthogonality) {
  Rng rng(23);
  for (Index d = 1; d <= 4; ++d) {
    const FitProblem p = test::random_problem(6, d, rng);
    const SignGadget g = build_sign_gadget(p, 0.7);
    const RealMatrix gram = g.G.transpose() * g.G;
    EXPECT_LE((gram - RealMatrix::Identity(d, d) / static_cast<double>(d))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    // Row norms all equal 1/sqrt(n_pad): the c1 = c2 = 1 instantiation.
    const Index n_pad = g.G.rows();
    for (Index i = 0; i < n_pad; ++i) {
      EXPECT_NEAR(g.G.row(i).squaredNorm(), 1.0 / static_cast<double>(n_pad),
                  1e-12);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_pad * d));
    for (Index i = 0; i < n_pad; ++i) {
      EXPECT_NEAR(std::abs(g.G(i, 0)), scale, 1e-14);
    }
  }
}

TEST(SignGadget, AugmentedFitConcatenatesSolution) {
  Rng rng(29);
  const FitProblem p = test::random_problem(8, 3, rng);
  const ClassicalFit fit = classical_fit(p);
  const SignGadget g = build_sign_gadget(p, fit.theta_norm);
  const ClassicalFit aug = classical_fit(g.augmented);

  // theta' is proportional to (theta_1..theta_d, ||theta||, 0, ..., 0).
  const Index d = p.d();
  for (Index j = 0; j < d; ++j) {
    EXPECT_NEAR(aug.theta_bar(j), fit.theta_bar(j) / std::sqrt(2.0), 1e-9);
  }
  EXPECT_NEAR(aug.theta_bar(d), 1.0 / std::sqrt(2.0), 1e-9);
  for (Index j = d + 1; j < 2 * d; ++j) {
    EXPECT_NEAR(aug.theta_bar(j), 0.0, 1e-9);
  }
}

TEST(SignGadget, AugmentedSingularValuesBracketed) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const FitProblem p = test::random_problem(8, 2, rng);
    const SignGadget g = build_sign_gadget(p, 0.9);
    const double s1 = p.spectral.singular_values(0);
    const double sd = p.spectral.singular_values(p.d() - 1);
    const double g_sv = 1.0 / std::sqrt(static_cast<double>(p.d()));
    const double lo = std::min(s1, g_sv) / std::sqrt(2.0);
    const double hi = std::max(sd, g_sv) / std::sqrt(2.0);
    const auto& sv = g.augmented.spectral.singular_values;
    EXPECT_GE(sv(0), lo - 1e-10);
    EXPECT_LE(sv(sv.size() - 1), hi + 1e-10);
  }
}

TEST(SignGadget, PerturbedNormEstimateKeepsSigns) {
  Rng rng(37);
  const FitProblem p = test::random_problem(8, 3, rng);
  const ClassicalFit fit = classical_fit(p);
  for (double delta : {-0.1, -0.05, 0.05, 0.1}) {
    const SignGadget g =
        build_sign_gadget(p, fit.theta_norm * (1.0 + delta));
    const ClassicalFit aug = classical_fit(g.augmented);
    for (Index j = 0; j < p.d(); ++j) {
      if (std::abs(fit.theta_bar(j)) > 1e-8) {
        EXPECT_GT(aug.theta_bar(j) * fit.theta_bar(j), 0.0);
      }
    }
  }
}

TEST(SignGadget, PadsToPowerOfTwo) {
  Rng rng(41);
  const FitProblem p = test::random_problem(6, 2, rng);  // 6 -> 8 rows
  const SignGadget g = build_sign_gadget(p, 1.0);
  EXPECT_EQ(g.G.rows(), 8);
  EXPECT_EQ(g.F_prime.rows(), 16);
  // Padding leaves the fit unchanged: the augmented solution still embeds
  // the original one.
  const ClassicalFit fit = classical_fit(p);
  const SignGadget exact = build_sign_gadget(p, fit.theta_norm);
  const ClassicalFit aug = classical_fit(exact.augmented);
  for (Index j = 0; j < p.d(); ++j) {
    EXPECT_NEAR(aug.theta_bar(j), fit.theta_bar(j) / std::sqrt(2.0), 1e-9);
  }
}

TEST(SignGadget, RejectsBadNorm) {
  Rng rng(43);
  const FitProblem p = test::random_problem(4, 2, rng);
  EXPECT_THROW(build_sign_gadget(p, 0.0), Error);
  EXPECT_THROW(build_sign_gadget(p, -1.0), Error);
}

TEST(CheckBounds, SingleColumn) {
  RealVector y(2);
  y << 0.6, 0.8;
  const FitProblem p = normalize_problem(column_half_half(), y);
  // d = 1 forces s_1 = 1.
  EXPECT_NEAR(p.spectral.singular_values(0), 1.0, 1e-12);
  const BoundsReport report = check_bounds(p);
  EXPECT_TRUE(report.all_pass);
}

TEST(CheckBounds, OrthogonalEqualNorms) {
  RealMatrix f(4, 2);
  f << 1, 0, 0, 1, 1, 0, 0, -1;
  RealVector y(4);
  y << 1, 1, 0, 0;
  const FitProblem p = normalize_problem(f, y);
  EXPECT_NEAR(p.kappa, 1.0, 1e-12);
  for (Index j = 0; j < 2; ++j) {
    EXPECT_NEAR(p.spectral.singular_values(j), 1.0 / std::sqrt(2.0), 1e-12);
  }
  EXPECT_TRUE(check_bounds(p).all_pass);
}

TEST(CheckBounds, RandomSweep) {
  Rng rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 4 + static_cast<Index>(rng.integer(8));
    const Index d = 1 + static_cast<Index>(rng.integer(std::min<Index>(4, n)));
    const FitProblem p = test::random_problem(n, d, rng);
    const BoundsReport report = check_bounds(p);
    EXPECT_TRUE(report.all_pass) << "trial " << trial;
  }
}

}  // namespace
}  // namespace qfit
