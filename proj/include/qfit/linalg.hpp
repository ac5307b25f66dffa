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

#include <Eigen/Dense>
#include <complex>

#include "qfit/errors.hpp"

namespace qfit {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kRankTol = 1e-12;

/// Normalized complex amplitude vector. Unnormalized vectors must be tagged
/// explicitly at construction.
class StateVector {
 public:
  explicit StateVector(ComplexVector amplitudes, bool normalized = true);

  Index dim() const { return amplitudes_.size(); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  bool is_normalized() const { return normalized_; }

  double norm() const { return amplitudes_.norm(); }

  /// Projector |psi><psi| (requires a normalized state).
  ComplexMatrix projector() const;

 private:
  ComplexVector amplitudes_;
  bool normalized_;
};

/// Hermitian, positive semidefinite, unit-trace matrix. Construction
/// symmetrizes the input, clips eigenvalues in [-1e-10, 0) to zero and
/// renormalizes the spectrum, so long channel compositions keep the
/// invariants testable.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(const ComplexMatrix& m);
  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(Index dim);

  Index dim() const { return entries_.rows(); }
  const ComplexMatrix& matrix() const { return entries_; }

 private:
  explicit DensityMatrix(ComplexMatrix entries)
      : entries_(std::move(entries)) {}

  ComplexMatrix entries_;
};

/// Singular triples of a real matrix, sorted ascending by singular value.
/// Columns of left_vectors / right_vectors are the u_j / v_j.
struct SpectralData {
  RealVector singular_values;
  RealMatrix left_vectors;   // n x d
  RealMatrix right_vectors;  // d x d

  Index count() const { return singular_values.size(); }
  RealMatrix reconstruct() const;
};

/// SVD of a full-column-rank n x d matrix (n >= d). Throws RankDeficient if
/// the smallest singular value is <= 1e-12.
SpectralData svd(const RealMatrix& F);

/// e^{iHt} for Hermitian H, via eigendecomposition. Throws NotHermitian.
ComplexMatrix herm_exp(const ComplexMatrix& H, double t);

/// Trace distance D(rho1, rho2) = ||rho1 - rho2||_tr / 2.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

enum class Subsystem { First, Second };

/// Partial trace of a state on A (x) B; `keep` selects the retained factor.
DensityMatrix partial_trace(const DensityMatrix& rho, Index dim_a, Index dim_b,
                            Subsystem keep);
ComplexMatrix partial_trace(const ComplexMatrix& rho, Index dim_a, Index dim_b,
                            Subsystem keep);

double operator_norm(const ComplexMatrix& a);
double trace_norm(const ComplexMatrix& a);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermTol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace qfit
