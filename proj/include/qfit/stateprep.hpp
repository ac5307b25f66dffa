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

#include <optional>
#include <variant>
#include <vector>

#include "qfit/linalg.hpp"
#include "qfit/problem.hpp"

namespace qfit {

/// One row of the design matrix, discretized into M equal-weight buckets so a
/// uniform superposition can be folded into the row direction. M = ceil(d /
/// gamma^2) buckets give ||phi_i - normalized row|| <= sqrt(2) * gamma.
struct DiscretizedRow {
  Index row = 0;
  long long bucket_count = 0;             // M
  std::vector<double> partial_sums;       // S_{i,0..d}, prefix sums of squares
  std::vector<long long> bucket_bounds;   // M_{i,0..d} = ceil(M S_j / S_d)
  std::vector<long long> bucket_sizes;    // Z_{i,1..d}
  RealVector phi;                         // unit vector, sgn(F_ij) sqrt(Z_j/M)

  /// || phi - row/||row|| ||.
  double error(const FitProblem& p) const;
};

/// Counted work for a preparation routine. Oracle queries are counted per
/// execution of the base circuit; amplification multiplies executions.
struct CostModel {
  long long oracle_F_queries = 0;
  long long oracle_y_queries = 0;
  long long base_executions = 1;
  long long amplification_rounds = 0;
  long long amplification_repetitions = 0;
  long long copies_consumed = 0;

  CostModel& operator+=(const CostModel& other);
};

/// Output of a preparation routine: the exact postselected state, the
/// pre-amplification success probability, and the accuracy budget (trace
/// distance to the ideal target) that the recorded amplification achieves.
struct PreparedState {
  std::variant<std::monostate, StateVector, DensityMatrix> state;
  double success_probability = 1.0;
  double accuracy = 0.0;
  CostModel cost;

  const StateVector& pure() const { return std::get<StateVector>(state); }
  const DensityMatrix& mixed() const { return std::get<DensityMatrix>(state); }
};

DiscretizedRow discretize_row(const FitProblem& p, Index i, double gamma);

/// Prepares |F> = sum_ij F_ij |i>|j> (dim n*d) by the uniform-superposition /
/// row-rotation / postselection route. With `discretization_gamma` set, the
/// row directions go through discretize_row instead of being exact, and the
/// resulting error is folded into the accuracy budget.
PreparedState prepare_F_state(
    const FitProblem& p, double delta,
    std::optional<double> discretization_gamma = std::nullopt);

/// sigma = F F^T as a density matrix: the reduced first register of |F>.
PreparedState prepare_sigma(
    const FitProblem& p, double delta,
    std::optional<double> discretization_gamma = std::nullopt);

/// Prepares |y> = sum_i y_i |i>.
PreparedState prepare_y_state(const FitProblem& p, double delta);

/// tau_{+-} = sum_j s_j^2 |w_j><w_j| with w_j = (|0>|v_j> +- |1>|u_j>)/sqrt(2)
/// on dim 2n (v_j embedded into n dims).
PreparedState prepare_tau(const FitProblem& p, int sign, double delta);

/// tau+ - tau-: Hermitian with eigenvalues +-s_j^2, not a state.
ComplexMatrix tau_difference(const FitProblem& p);

}  // namespace qfit
