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

#include "qfit/stateprep.hpp"

#include <cmath>

#include "qfit/primitives.hpp"

namespace qfit {

namespace {

double sgn(double z) { return z >= 0.0 ? 1.0 : -1.0; }

// Embeds v_j (dim d) into n coordinates and forms
// (|0>|v_j> +- |1>|u_j>)/sqrt(2) on dim 2n.
RealVector w_vector(const FitProblem& p, Index j, int sign) {
  const Index n = p.n();
  RealVector w = RealVector::Zero(2 * n);
  w.head(p.d()) = p.spectral.right_vectors.col(j) / std::sqrt(2.0);
  w.tail(n) = sign * p.spectral.left_vectors.col(j) / std::sqrt(2.0);
  return w;
}

}  // namespace

CostModel& CostModel::operator+=(const CostModel& other) {
  oracle_F_queries += other.oracle_F_queries;
  oracle_y_queries += other.oracle_y_queries;
  base_executions += other.base_executions;
  amplification_rounds += other.amplification_rounds;
  amplification_repetitions += other.amplification_repetitions;
  copies_consumed += other.copies_consumed;
  return *this;
}

double DiscretizedRow::error(const FitProblem& p) const {
  RealVector row_bar = p.F.row(row).transpose();
  row_bar /= row_bar.norm();
  return (phi - row_bar).norm();
}

DiscretizedRow discretize_row(const FitProblem& p, Index i, double gamma) {
  if (i < 0 || i >= p.n()) {
    throw Error(ErrorCode::DimMismatch, "row index out of range");
  }
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw Error(ErrorCode::BadWeights, "gamma must be in (0, 1)");
  }
  const Index d = p.d();
  if (p.F.row(i).norm() == 0.0) {
    throw Error(ErrorCode::ZeroRow,
                "row " + std::to_string(i) + " of the design matrix is zero");
  }

  DiscretizedRow out;
  out.row = i;
  out.bucket_count = static_cast<long long>(
      std::ceil(static_cast<double>(d) / (gamma * gamma)));
  const long long M = out.bucket_count;

  out.partial_sums.resize(d + 1);
  out.partial_sums[0] = 0.0;
  for (Index j = 0; j < d; ++j) {
    out.partial_sums[j + 1] = out.partial_sums[j] + p.F(i, j) * p.F(i, j);
  }
  const double total = out.partial_sums[d];

  out.bucket_bounds.resize(d + 1);
  out.bucket_bounds[0] = 0;
  for (Index j = 1; j <= d; ++j) {
    const double frac = out.partial_sums[j] / total;
    long long bound =
        static_cast<long long>(std::ceil(static_cast<double>(M) * frac));
    out.bucket_bounds[j] =
        std::clamp(bound, out.bucket_bounds[j - 1], M);
  }
  out.bucket_bounds[d] = M;  // S_{i,d}/S_{i,d} = 1 exactly

  out.bucket_sizes.resize(d);
  out.phi = RealVector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    out.bucket_sizes[j] = out.bucket_bounds[j + 1] - out.bucket_bounds[j];
    out.phi(j) =
        sgn(p.F(i, j)) * std::sqrt(static_cast<double>(out.bucket_sizes[j]) /
                                   static_cast<double>(M));
  }
  return out;
}

PreparedState prepare_F_state(const FitProblem& p, double delta,
                              std::optional<double> discretization_gamma) {
  if (delta <= 0.0 || delta >= 1.0) {
    throw Error(ErrorCode::BadWeights, "delta must be in (0, 1)");
  }
  const Index n = p.n();
  const Index d = p.d();

  // Row directions: exact, or discretized when a gamma budget is given.
  double discretization_error = 0.0;
  RealMatrix directions = RealMatrix::Zero(n, d);
  for (Index i = 0; i < n; ++i) {
    const double row_norm = p.F.row(i).norm();
    if (row_norm == 0.0) continue;  // zero amplitude from the rotation
    if (discretization_gamma.has_value()) {
      DiscretizedRow row = discretize_row(p, i, *discretization_gamma);
      directions.row(i) = row.phi.transpose();
      discretization_error =
          std::max(discretization_error, row.error(p));
    } else {
      directions.row(i) = p.F.row(i) / row_norm;
    }
  }

  // Uniform superposition over rows, rotate by ||F_i||/beta, postselect 1.
  ComplexVector amps(n * d);
  double success = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double row_norm = p.F.row(i).norm();
    const double rot = row_norm / p.beta;
    success += rot * rot / static_cast<double>(n);
    for (Index j = 0; j < d; ++j) {
      amps(i * d + j) = directions(i, j) * rot / std::sqrt(n);
    }
  }
  amps /= amps.norm();

  PreparedState out;
  out.state = StateVector(std::move(amps));
  out.success_probability = success;
  out.accuracy = delta + 2.0 * discretization_error;
  const AmplifyCost amp = amplitude_amplify_cost(success, delta);
  out.cost.oracle_F_queries = 4 * d;  // row rotation + direction, uncomputed
  out.cost.amplification_rounds = amp.rounds;
  out.cost.amplification_repetitions = amp.repetitions;
  return out;
}

PreparedState prepare_sigma(const FitProblem& p, double delta,
                            std::optional<double> discretization_gamma) {
  PreparedState f = prepare_F_state(p, delta, discretization_gamma);
  PreparedState out;
  out.state = partial_trace(DensityMatrix::pure(f.pure()), p.n(), p.d(),
                            Subsystem::First);
  out.success_probability = f.success_probability;
  out.accuracy = f.accuracy;
  out.cost = f.cost;
  return out;
}

PreparedState prepare_y_state(const FitProblem& p, double delta) {
  if (delta <= 0.0 || delta >= 1.0) {
    throw Error(ErrorCode::BadWeights, "delta must be in (0, 1)");
  }
  const Index n = p.n();
  double success = 0.0;
  for (Index i = 0; i < n; ++i) {
    success += p.y(i) * p.y(i) / (static_cast<double>(n) * p.zeta * p.zeta);
  }

  PreparedState out;
  out.state = StateVector(p.y.cast<Complex>());
  out.success_probability = success;
  out.accuracy = delta;
  const AmplifyCost amp = amplitude_amplify_cost(success, delta);
  out.cost.oracle_y_queries = 2;
  out.cost.amplification_rounds = amp.rounds;
  out.cost.amplification_repetitions = amp.repetitions;
  return out;
}

PreparedState prepare_tau(const FitProblem& p, int sign, double delta) {
  if (sign != +1 && sign != -1) {
    throw Error(ErrorCode::BadWeights, "sign must be +1 or -1");
  }
  PreparedState f = prepare_F_state(p, delta);
  const Index n = p.n();
  const Index d = p.d();

  // |F> with the addressed register appended: sum_j s_j |u_j>|v_j>|w_j>.
  // The reduced state on the last register is sum_j s_j^2 |w_j><w_j|.
  RealMatrix psi = RealMatrix::Zero(n * d, 2 * n);
  for (Index j = 0; j < d; ++j) {
    RealVector uv(n * d);
    for (Index i = 0; i < n; ++i) {
      uv.segment(i * d, d) = p.spectral.left_vectors(i, j) *
                             p.spectral.right_vectors.col(j);
    }
    psi += p.spectral.singular_values(j) * uv * w_vector(p, j, sign).transpose();
  }
  RealMatrix reduced = psi.transpose() * psi;

  PreparedState out;
  out.state = DensityMatrix::from_matrix(reduced.cast<Complex>());
  out.success_probability = f.success_probability;
  out.accuracy = f.accuracy;
  out.cost = f.cost;
  return out;
}

ComplexMatrix tau_difference(const FitProblem& p) {
  const Index n = p.n();
  RealMatrix tau = RealMatrix::Zero(2 * n, 2 * n);
  for (Index j = 0; j < p.d(); ++j) {
    const double s2 = p.spectral.singular_values(j) *
                      p.spectral.singular_values(j);
    const RealVector wp = w_vector(p, j, +1);
    const RealVector wm = w_vector(p, j, -1);
    tau += s2 * (wp * wp.transpose() - wm * wm.transpose());
  }
  return tau.cast<Complex>();
}

}  // namespace qfit
