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

#include <cmath>

namespace qfit {

namespace {

constexpr Index kMaxGadgetRows = 1 << 14;

void fill_spread_parameters(FitProblem& p) {
  const Index n = p.n();
  double alpha = std::numeric_limits<double>::infinity();
  double beta = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double row_norm = p.F.row(i).norm();
    if (row_norm == 0.0) continue;  // padded rows carry no amplitude
    alpha = std::min(alpha, row_norm);
    beta = std::max(beta, row_norm);
  }
  double eta = std::numeric_limits<double>::infinity();
  double zeta = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double v = std::abs(p.y(i));
    if (v == 0.0) continue;
    eta = std::min(eta, v);
    zeta = std::max(zeta, v);
  }
  p.alpha = alpha;
  p.beta = beta;
  p.eta = eta;
  p.zeta = zeta;
  p.nu = beta / alpha;
  p.chi = zeta / eta;
}

}  // namespace

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

FitProblem normalize_problem(const RealMatrix& F_raw, const RealVector& y_raw,
                             double bound_a, double bound_b) {
  if (F_raw.size() == 0 || F_raw.norm() == 0.0) {
    throw Error(ErrorCode::ZeroInput, "design matrix is zero");
  }
  if (y_raw.size() == 0 || y_raw.norm() == 0.0) {
    throw Error(ErrorCode::ZeroInput, "response vector is zero");
  }
  if (F_raw.rows() != y_raw.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "design matrix has " + std::to_string(F_raw.rows()) +
                    " rows but response has " + std::to_string(y_raw.size()) +
                    " entries");
  }
  if (F_raw.rows() < F_raw.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "need n >= d");
  }

  FitProblem p;
  p.F = F_raw / std::sqrt((F_raw.transpose() * F_raw).trace());
  p.y = y_raw / y_raw.norm();
  p.spectral = svd(p.F);  // throws RankDeficient

  const double s_min = p.spectral.singular_values(0);
  const double s_max = p.spectral.singular_values(p.d() - 1);
  if (bound_a <= 0.0) {
    p.a = s_min;
    p.b = s_max;
  } else {
    if (bound_a > s_min + 1e-12 || bound_b < s_max - 1e-12) {
      throw Error(ErrorCode::BadWeights,
                  "bounds must satisfy a <= s_1 and s_d <= b");
    }
    p.a = bound_a;
    p.b = bound_b;
  }
  p.kappa = p.b / p.a;
  fill_spread_parameters(p);
  return p;
}

FitProblem normalize_problem(const RealMatrix& F_raw, const RealVector& y_raw) {
  return normalize_problem(F_raw, y_raw, 0.0, 0.0);
}

ClassicalFit classical_fit(const FitProblem& p) {
  const SpectralData& sp = p.spectral;
  const Index d = p.d();

  ClassicalFit fit;
  fit.theta_hat = RealVector::Zero(d);
  fit.y_hat = RealVector::Zero(p.n());
  for (Index j = 0; j < d; ++j) {
    const double alpha_j = sp.left_vectors.col(j).dot(p.y);
    fit.theta_hat += alpha_j / sp.singular_values(j) * sp.right_vectors.col(j);
    fit.y_hat += alpha_j * sp.left_vectors.col(j);
  }
  fit.residual = p.y - fit.y_hat;
  fit.phi = fit.y_hat.squaredNorm();
  fit.E_hat = fit.residual.squaredNorm();
  fit.theta_norm = fit.theta_hat.norm();
  fit.theta_bar = fit.theta_norm > 0.0
                      ? RealVector(fit.theta_hat / fit.theta_norm)
                      : RealVector(RealVector::Zero(d));
  return fit;
}

SignGadget build_sign_gadget(const FitProblem& p, double theta_norm_est) {
  if (theta_norm_est <= 0.0) {
    throw Error(ErrorCode::ZeroInput, "theta_norm_est must be positive");
  }
  const Index d = p.d();
  const Index n_pad = next_pow2(std::max(p.n(), d));
  if (n_pad > kMaxGadgetRows) {
    throw Error(ErrorCode::BadDimension,
                "padded row count " + std::to_string(n_pad) +
                    " exceeds the size cap");
  }

  // Sylvester Hadamard entries H_{i,j} = (-1)^{popcount(i & j)}.
  SignGadget g;
  g.G = RealMatrix(n_pad, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_pad) *
                                       static_cast<double>(d));
  for (Index i = 0; i < n_pad; ++i) {
    for (Index j = 0; j < d; ++j) {
      const int bits = __builtin_popcountll(static_cast<unsigned long long>(i) &
                                            static_cast<unsigned long long>(j));
      g.G(i, j) = (bits % 2 == 0 ? scale : -scale);
    }
  }
  g.z = theta_norm_est * g.G.col(0);
  g.theta_norm_estimate = theta_norm_est;

  RealMatrix F_pad = RealMatrix::Zero(n_pad, d);
  F_pad.topRows(p.n()) = p.F;
  RealVector y_pad = RealVector::Zero(n_pad);
  y_pad.head(p.n()) = p.y;

  g.F_prime = RealMatrix::Zero(2 * n_pad, 2 * d);
  g.F_prime.topLeftCorner(n_pad, d) = F_pad / std::sqrt(2.0);
  g.F_prime.bottomRightCorner(n_pad, d) = g.G / std::sqrt(2.0);

  const double denom =
      std::sqrt(1.0 + theta_norm_est * theta_norm_est / static_cast<double>(d));
  g.y_prime = RealVector(2 * n_pad);
  g.y_prime.head(n_pad) = y_pad / denom;
  g.y_prime.tail(n_pad) = g.z / denom;

  g.augmented = normalize_problem(g.F_prime, g.y_prime);
  return g;
}

BoundsReport check_bounds(const FitProblem& p) {
  BoundsReport report;
  const double sqrt_d = std::sqrt(static_cast<double>(p.d()));
  const double s1 = p.spectral.singular_values(0);
  const double sd = p.spectral.singular_values(p.d() - 1);
  const ClassicalFit fit = classical_fit(p);
  const double tn2 = fit.theta_norm * fit.theta_norm;
  const double dphi = static_cast<double>(p.d()) * fit.phi;

  auto add = [&report](std::string name, double lhs, double rhs) {
    BoundCheck c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.pass = lhs <= rhs + 1e-12;
    report.all_pass = report.all_pass && c.pass;
    report.checks.push_back(std::move(c));
  };

  add("1/(kappa sqrt(d)) <= s_1", 1.0 / (p.kappa * sqrt_d), s1);
  add("s_d <= kappa/sqrt(d)", sd, p.kappa / sqrt_d);
  add("a <= s_1", p.a, s1);
  add("s_d <= b", sd, p.b);
  add("d Phi / kappa^2 <= ||theta||^2", dphi / (p.kappa * p.kappa), tn2);
  add("||theta||^2 <= d Phi kappa^2", tn2, dphi * p.kappa * p.kappa);
  add("sum s_j^2 = 1 (lower)", p.spectral.singular_values.squaredNorm(),
      1.0 + 1e-10);
  add("sum s_j^2 = 1 (upper)", 1.0 - 1e-10,
      p.spectral.singular_values.squaredNorm());
  return report;
}

}  // namespace qfit
