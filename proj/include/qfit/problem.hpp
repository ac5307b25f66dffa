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

#include <string>
#include <vector>

#include "qfit/linalg.hpp"

namespace qfit {

/// A least-squares fitting instance in normalized form:
/// tr(F^T F) = 1 and ||y|| = 1, together with the spectral and spread
/// parameters every estimator consumes.
///
/// alpha/beta bound the row norms of F over nonzero rows, eta/zeta bound
/// |y_i| over nonzero entries, and [a, b] brackets the singular values
/// (defaulting to the exact extremes s_1, s_d).
struct FitProblem {
  RealMatrix F;  // n x d
  RealVector y;  // n

  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double nu = 1.0;
  double chi = 1.0;
  double kappa = 1.0;

  SpectralData spectral;

  Index n() const { return F.rows(); }
  Index d() const { return F.cols(); }
};

/// Exact least-squares solution, computed classically from the SVD.
struct ClassicalFit {
  RealVector theta_hat;  // d
  RealVector y_hat;      // n
  RealVector residual;   // n
  double phi = 0.0;      // ||y_hat||^2 / ||y||^2
  double E_hat = 0.0;    // ||residual||^2
  RealVector theta_bar;  // unit vector, zero if theta_hat == 0
  double theta_norm = 0.0;
};

/// Sign-reference augmentation: a scaled Hadamard block G with a known-sign
/// solution entry, glued to the original problem as
/// F' = blockdiag(F, G)/sqrt(2), y' = (y; z)/sqrt(1 + est^2/d).
struct SignGadget {
  RealMatrix G;        // n x d, G^T G = I/d, |G_{i,1}| = 1/sqrt(n d)
  RealVector z;        // est * first column of G
  RealMatrix F_prime;  // 2n x 2d
  RealVector y_prime;  // 2n
  double theta_norm_estimate = 0.0;
  FitProblem augmented;  // normalized problem built from (F', y')
};

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  double slack = 0.0;  // rhs - lhs
};

struct BoundsReport {
  std::vector<BoundCheck> checks;
  bool all_pass = true;
};

/// Scales raw inputs to tr(F^T F) = 1, ||y|| = 1 and derives all bound
/// parameters. Throws ZeroInput / RankDeficient.
FitProblem normalize_problem(const RealMatrix& F_raw, const RealVector& y_raw);

/// As normalize_problem, but with explicit singular-value bounds a <= s_1,
/// s_d <= b (looser-than-exact bounds stress the error budgets).
FitProblem normalize_problem(const RealMatrix& F_raw, const RealVector& y_raw,
                             double bound_a, double bound_b);

/// theta_hat = F^+ y via the SVD pseudoinverse, plus fitted values,
/// residual and fit quality.
ClassicalFit classical_fit(const FitProblem& p);

/// Builds the sign gadget. Pads F with zero rows to the next power of two
/// when needed (padding leaves theta_hat, y_hat and phi unchanged).
/// theta_norm_est must be positive.
SignGadget build_sign_gadget(const FitProblem& p, double theta_norm_est);

/// Evaluates the singular-value and parameter-norm inequalities with slack.
BoundsReport check_bounds(const FitProblem& p);

/// Smallest power of two >= n.
Index next_pow2(Index n);

}  // namespace qfit
