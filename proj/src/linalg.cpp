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

#include "qfit/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace qfit {

namespace {

void require_finite(const ComplexMatrix& m, const char* who) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::BadWeights, std::string(who) + ": non-finite entries");
  }
}

}  // namespace

StateVector::StateVector(ComplexVector amplitudes, bool normalized)
    : amplitudes_(std::move(amplitudes)), normalized_(normalized) {
  if (amplitudes_.size() == 0) {
    throw Error(ErrorCode::ZeroInput, "empty state vector");
  }
  if (normalized_ && std::abs(amplitudes_.norm() - 1.0) > 1e-10) {
    throw Error(ErrorCode::BadWeights, "state vector is not normalized");
  }
}

ComplexMatrix StateVector::projector() const {
  return amplitudes_ * amplitudes_.adjoint();
}

DensityMatrix DensityMatrix::from_matrix(const ComplexMatrix& m) {
  require_finite(m, "DensityMatrix");
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimMismatch, "density matrix must be square");
  }
  if (!is_hermitian(m)) {
    throw Error(ErrorCode::NotHermitian, "density matrix must be Hermitian");
  }
  ComplexMatrix sym = (m + m.adjoint()) / 2.0;

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  RealVector evals = es.eigenvalues();
  double min_eval = evals.minCoeff();
  if (min_eval < -kPsdTol) {
    throw Error(ErrorCode::BadWeights, "density matrix is not PSD (min eigenvalue " +
                                           std::to_string(min_eval) + ")");
  }
  double trace = sym.trace().real();
  if (std::abs(trace - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadWeights,
                "density matrix trace " + std::to_string(trace) + " != 1");
  }
  if (min_eval < 0.0) {
    // Clip roundoff negatives and renormalize the spectrum.
    RealVector clipped = evals.cwiseMax(0.0);
    clipped /= clipped.sum();
    sym = es.eigenvectors() * clipped.asDiagonal() *
          es.eigenvectors().adjoint();
    sym = (sym + sym.adjoint()) / 2.0;
  } else {
    sym /= trace;
  }
  return DensityMatrix(std::move(sym));
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  if (!psi.is_normalized()) {
    throw Error(ErrorCode::BadWeights, "pure state must be normalized");
  }
  return DensityMatrix(psi.projector());
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) /
                       static_cast<double>(dim));
}

RealMatrix SpectralData::reconstruct() const {
  RealMatrix f = RealMatrix::Zero(left_vectors.rows(), right_vectors.rows());
  for (Index j = 0; j < count(); ++j) {
    f += singular_values(j) * left_vectors.col(j) *
         right_vectors.col(j).transpose();
  }
  return f;
}

SpectralData svd(const RealMatrix& F) {
  if (F.rows() < F.cols()) {
    throw Error(ErrorCode::DimMismatch, "svd requires n >= d");
  }
  if (!F.allFinite()) {
    throw Error(ErrorCode::ZeroInput, "svd: non-finite entries");
  }
  Eigen::JacobiSVD<RealMatrix> solver(F,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index d = F.cols();
  RealVector s(d);
  RealMatrix u(F.rows(), d);
  RealMatrix v(d, d);
  // Eigen sorts descending; the convention here is ascending s_1 <= ... <= s_d.
  for (Index j = 0; j < d; ++j) {
    const Index src = d - 1 - j;
    s(j) = solver.singularValues()(src);
    u.col(j) = solver.matrixU().col(src);
    v.col(j) = solver.matrixV().col(src);
  }
  if (s(0) <= kRankTol) {
    throw Error(ErrorCode::RankDeficient,
                "smallest singular value " + std::to_string(s(0)) +
                    " <= 1e-12; design matrix must have full column rank");
  }
  return SpectralData{std::move(s), std::move(u), std::move(v)};
}

ComplexMatrix herm_exp(const ComplexMatrix& H, double t) {
  if (H.rows() != H.cols()) {
    throw Error(ErrorCode::DimMismatch, "herm_exp requires a square matrix");
  }
  if (!is_hermitian(H)) {
    throw Error(ErrorCode::NotHermitian, "herm_exp requires a Hermitian matrix");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H);
  ComplexVector phases(H.rows());
  for (Index k = 0; k < H.rows(); ++k) {
    phases(k) = std::exp(Complex(0.0, es.eigenvalues()(k) * t));
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimMismatch, "trace_distance: dimension mismatch");
  }
  return 0.5 * trace_norm(a - b);
}

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  return trace_distance(rho1.matrix(), rho2.matrix());
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, Index dim_a, Index dim_b,
                            Subsystem keep) {
  if (rho.rows() != dim_a * dim_b || rho.cols() != dim_a * dim_b) {
    throw Error(ErrorCode::BadFactorization,
                "partial_trace: dimension does not factor as " +
                    std::to_string(dim_a) + " x " + std::to_string(dim_b));
  }
  if (keep == Subsystem::Second) {
    ComplexMatrix out = ComplexMatrix::Zero(dim_b, dim_b);
    for (Index i = 0; i < dim_a; ++i) {
      out += rho.block(i * dim_b, i * dim_b, dim_b, dim_b);
    }
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(dim_a, dim_a);
  for (Index i = 0; i < dim_a; ++i) {
    for (Index j = 0; j < dim_a; ++j) {
      out(i, j) = rho.block(i * dim_b, j * dim_b, dim_b, dim_b).trace();
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Index dim_a, Index dim_b,
                            Subsystem keep) {
  return DensityMatrix::from_matrix(
      partial_trace(rho.matrix(), dim_a, dim_b, keep));
}

double operator_norm(const ComplexMatrix& a) {
  require_finite(a, "operator_norm");
  Eigen::JacobiSVD<ComplexMatrix> solver(a);
  return solver.singularValues()(0);
}

double trace_norm(const ComplexMatrix& a) {
  require_finite(a, "trace_norm");
  Eigen::JacobiSVD<ComplexMatrix> solver(a);
  return solver.singularValues().sum();
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace qfit
