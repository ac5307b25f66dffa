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

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>

#include "testutil.hpp"

namespace qfit {
namespace {

using test::random_density;
using test::random_hermitian;
using test::random_state;

TEST(Svd, OrthogonalColumns) {
  RealMatrix f(3, 2);
  f << 1, 0, 0, 1, 0, 0;
  f /= std::sqrt(2.0);
  const SpectralData sp = svd(f);
  EXPECT_NEAR(sp.singular_values(0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(sp.singular_values(1), 1.0 / std::sqrt(2.0), 1e-12);
  // Left vectors span the first two coordinates.
  EXPECT_NEAR(sp.left_vectors(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(sp.left_vectors(2, 1), 0.0, 1e-12);
  EXPECT_LE((sp.reconstruct() - f).norm(), 1e-12);
}

TEST(Svd, SingleUnitColumn) {
  RealMatrix f(2, 1);
  f << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const SpectralData sp = svd(f);
  EXPECT_NEAR(sp.singular_values(0), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(sp.left_vectors(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(std::abs(sp.right_vectors(0, 0)), 1.0, 1e-12);
  EXPECT_LE((sp.reconstruct() - f).norm(), 1e-12);
}

TEST(Svd, RandomReconstruction) {
  Rng rng(11);
  RealMatrix f = test::random_full_rank_matrix(8, 3, rng);
  f /= std::sqrt((f.transpose() * f).trace());
  const SpectralData sp = svd(f);
  EXPECT_LE((sp.reconstruct() - f).norm(), 1e-9);
  EXPECT_NEAR(sp.singular_values.squaredNorm(), 1.0, 1e-10);
  EXPECT_LE((sp.left_vectors.transpose() * sp.left_vectors -
             RealMatrix::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  EXPECT_LE((sp.right_vectors.transpose() * sp.right_vectors -
             RealMatrix::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  // Ascending order.
  EXPECT_LE(sp.singular_values(0), sp.singular_values(1));
  EXPECT_LE(sp.singular_values(1), sp.singular_values(2));
}

TEST(Svd, RankDeficientThrows) {
  RealMatrix f(3, 2);
  f << 1, 2, 2, 4, 3, 6;  // second column is twice the first
  try {
    svd(f);
    FAIL() << "expected RankDeficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}

TEST(HermExp, ZeroGenerator) {
  ComplexMatrix h = ComplexMatrix::Zero(1, 1);
  const ComplexMatrix u = herm_exp(h, 2.7);
  EXPECT_NEAR(std::abs(u(0, 0) - Complex(1.0, 0.0)), 0.0, 1e-14);
}

TEST(HermExp, PauliZ) {
  ComplexMatrix z(2, 2);
  z << 1, 0, 0, -1;
  const ComplexMatrix u = herm_exp(z, std::numbers::pi / 2.0);
  EXPECT_NEAR(std::abs(u(0, 0) - Complex(0.0, 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(u(1, 1) - Complex(0.0, -1.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(u(0, 1)), 0.0, 1e-12);
}

TEST(HermExp, RandomUnitary) {
  Rng rng(5);
  const ComplexMatrix h = random_hermitian(4, rng);
  const ComplexMatrix u = herm_exp(h, 0.3);
  EXPECT_LE((u.adjoint() * u - ComplexMatrix::Identity(4, 4))
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
  // Independent route: Pade-based matrix exponential.
  const ComplexMatrix want = (Complex(0.0, 0.3) * h).exp();
  EXPECT_LE((u - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HermExp, NotHermitianThrows) {
  ComplexMatrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_THROW(herm_exp(m, 1.0), Error);
}

TEST(HermExp, GroupProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix h = random_hermitian(3, rng);
    const double t1 = rng.uniform(-2.0, 2.0);
    const double t2 = rng.uniform(-2.0, 2.0);
    const ComplexMatrix lhs = herm_exp(h, t1) * herm_exp(h, t2);
    const ComplexMatrix rhs = herm_exp(h, t1 + t2);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TraceDistance, IdenticalStates) {
  Rng rng(3);
  const DensityMatrix rho = random_density(4, rng);
  EXPECT_NEAR(trace_distance(rho, rho), 0.0, 1e-12);
}

TEST(TraceDistance, OrthogonalPureStates) {
  ComplexVector e0 = ComplexVector::Zero(2), e1 = ComplexVector::Zero(2);
  e0(0) = 1.0;
  e1(1) = 1.0;
  const auto rho0 = DensityMatrix::pure(StateVector(e0));
  const auto rho1 = DensityMatrix::pure(StateVector(e1));
  EXPECT_NEAR(trace_distance(rho0, rho1), 1.0, 1e-12);
}

TEST(TraceDistance, PureVsMaximallyMixed) {
  ComplexVector e0 = ComplexVector::Zero(2);
  e0(0) = 1.0;
  const auto rho = DensityMatrix::pure(StateVector(e0));
  EXPECT_NEAR(trace_distance(rho, DensityMatrix::maximally_mixed(2)), 0.5,
              1e-12);
}

TEST(TraceDistance, TriangleInequality) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const DensityMatrix a = random_density(3, rng);
    const DensityMatrix b = random_density(3, rng);
    const DensityMatrix c = random_density(3, rng);
    EXPECT_LE(trace_distance(a, c),
              trace_distance(a, b) + trace_distance(b, c) + 1e-9);
  }
}

TEST(PartialTrace, ProductState) {
  Rng rng(23);
  const DensityMatrix rho = random_density(2, rng);
  const DensityMatrix sigma = random_density(3, rng);
  const ComplexMatrix joint = kron(rho.matrix(), sigma.matrix());
  const DensityMatrix reduced = partial_trace(
      DensityMatrix::from_matrix(joint), 2, 3, Subsystem::Second);
  EXPECT_LE((reduced.matrix() - sigma.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  const DensityMatrix first = partial_trace(DensityMatrix::from_matrix(joint),
                                            2, 3, Subsystem::First);
  EXPECT_LE((first.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PartialTrace, MaximallyEntangled) {
  ComplexVector bell = ComplexVector::Zero(4);
  bell(0) = 1.0 / std::sqrt(2.0);
  bell(3) = 1.0 / std::sqrt(2.0);
  const auto rho = DensityMatrix::pure(StateVector(bell));
  const DensityMatrix reduced = partial_trace(rho, 2, 2, Subsystem::First);
  EXPECT_LE((reduced.matrix() - ComplexMatrix::Identity(2, 2) / 2.0)
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(PartialTrace, PreservesTrace) {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho = random_density(6, rng);
    const DensityMatrix r1 = partial_trace(rho, 2, 3, Subsystem::First);
    const DensityMatrix r2 = partial_trace(rho, 2, 3, Subsystem::Second);
    EXPECT_NEAR(r1.matrix().trace().real(), 1.0, 1e-10);
    EXPECT_NEAR(r2.matrix().trace().real(), 1.0, 1e-10);
  }
}

TEST(PartialTrace, BadFactorizationThrows) {
  Rng rng(31);
  const DensityMatrix rho = random_density(6, rng);
  EXPECT_THROW(partial_trace(rho, 4, 2, Subsystem::First), Error);
}

TEST(Norms, Identity) {
  const ComplexMatrix eye = ComplexMatrix::Identity(5, 5);
  EXPECT_NEAR(operator_norm(eye), 1.0, 1e-12);
  EXPECT_NEAR(trace_norm(eye), 5.0, 1e-12);
}

TEST(Norms, Diagonal) {
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  EXPECT_NEAR(operator_norm(d), 4.0, 1e-12);
  EXPECT_NEAR(trace_norm(d), 7.0, 1e-12);
}

TEST(Norms, OperatorBelowTrace) {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix m(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
    EXPECT_LE(operator_norm(m), trace_norm(m) + 1e-12);
  }
}

// ||e^{iA} - e^{iB}|| <= ||A - B|| for Hermitian A, B.
TEST(HermExp, ExponentialDifferenceBound) {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Index dim = 2 + static_cast<Index>(rng.integer(7));
    const ComplexMatrix a = random_hermitian(dim, rng, rng.uniform(0.1, 3.0));
    const ComplexMatrix b = random_hermitian(dim, rng, rng.uniform(0.1, 3.0));
    const double lhs = operator_norm(herm_exp(a, 1.0) - herm_exp(b, 1.0));
    const double rhs = operator_norm(a - b);
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(DensityMatrix, RejectsNonHermitian) {
  ComplexMatrix m(2, 2);
  m << 0.5, 0.3, 0.1, 0.5;
  EXPECT_THROW(DensityMatrix::from_matrix(m), Error);
}

TEST(DensityMatrix, ClipsRoundoffNegatives) {
  ComplexMatrix m(2, 2);
  m << 1.0 + 5e-11, 0.0, 0.0, -5e-11;
  const DensityMatrix rho = DensityMatrix::from_matrix(m);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-15);
  EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-12);
}

TEST(StateVector, RejectsUnnormalized) {
  ComplexVector v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(StateVector{v}, Error);
  StateVector ok(v, /*normalized=*/false);
  EXPECT_FALSE(ok.is_normalized());
}

}  // namespace
}  // namespace qfit
