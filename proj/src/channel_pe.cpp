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

#include "channel_pe.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace qfit::internal {

namespace {

enum Mode { kBoth, kLeft, kRight, kBothInverse };

// Superoperator (column-major vec) of one interaction against a fresh copy.
//   both sides:  X -> cos^2 X + sin^2 rho tr X + i cos sin [rho, X]
//   left only:   X -> cos X + i sin rho X
//   right only:  X -> cos X - i sin X rho
// The inverse interaction flips the sign of x.
ComplexMatrix interaction_superop(const ComplexMatrix& rho, double x,
                                  int mode) {
  if (mode == kBothInverse) {
    return interaction_superop(rho, -x, kBoth);
  }
  const Index d = rho.rows();
  const Index dd = d * d;
  const double c = std::cos(x);
  const double s = std::sin(x);
  const ComplexMatrix eye = ComplexMatrix::Identity(d, d);
  const ComplexMatrix left_mult = kron(eye, rho);              // rho X
  const ComplexMatrix right_mult = kron(rho.transpose(), eye); // X rho

  if (mode == kLeft) {
    return c * ComplexMatrix::Identity(dd, dd) + Complex(0, s) * left_mult;
  }
  if (mode == kRight) {
    return c * ComplexMatrix::Identity(dd, dd) - Complex(0, s) * right_mult;
  }
  ComplexMatrix out =
      c * c * ComplexMatrix::Identity(dd, dd) +
      Complex(0, c * s) * (left_mult - right_mult);
  // sin^2 * vec(rho) vec(I)^T implements rho tr(X).
  ComplexVector vec_rho(dd), vec_eye(dd);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      vec_rho(j * d + i) = rho(i, j);
      vec_eye(j * d + i) = eye(i, j);
    }
  }
  out += s * s * vec_rho * vec_eye.transpose();
  return out;
}

ComplexMatrix matrix_power(ComplexMatrix base, long long e) {
  const Index n = base.rows();
  ComplexMatrix result = ComplexMatrix::Identity(n, n);
  while (e > 0) {
    if (e & 1) result = result * base;
    base = base * base;
    e >>= 1;
  }
  return result;
}

ComplexVector vec_of(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

ComplexMatrix unvec(const ComplexVector& v, Index d) {
  return Eigen::Map<const ComplexMatrix>(v.data(), d, d);
}

double trace_of_vec(const ComplexVector& v, Index d) {
  double t = 0.0;
  for (Index i = 0; i < d; ++i) t += v(i * d + i).real();
  return t;
}

}  // namespace

ComplexMatrix ControlledEvolution::application_superop(int mode) const {
  const Index dd = dim_ * dim_;
  ComplexMatrix comp = ComplexMatrix::Identity(dd, dd);
  if (mode == kBothInverse) {
    // Reversed circuit: steps in reverse order, inverse interactions.
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      comp = matrix_power(interaction_superop(it->rho, it->x, kBothInverse),
                          it->count) *
             comp;
    }
  } else {
    for (const auto& step : steps_) {
      comp = matrix_power(interaction_superop(step.rho, step.x, mode),
                          step.count) *
             comp;
    }
  }
  return matrix_power(std::move(comp), repeats_);
}

ControlledEvolution::ControlledEvolution(
    Index dim, long long register_size,
    std::vector<InteractionStep> per_application, ComplexMatrix initial_state,
    long long application_repeats)
    : dim_(dim),
      M_(register_size),
      steps_(std::move(per_application)),
      repeats_(application_repeats),
      initial_(std::move(initial_state)) {
  both_ = application_superop(kBoth);
  left_ = application_superop(kLeft);
  right_ = application_superop(kRight);
  both_inverse_ = application_superop(kBothInverse);
}

long long ControlledEvolution::interaction_slots() const {
  long long per_app = 0;
  for (const auto& s : steps_) per_app += s.count;
  return (M_ - 1) * per_app * repeats_;
}

std::vector<double> ControlledEvolution::register_distribution() const {
  const ComplexVector rho0 = vec_of(initial_);
  // Trace kernel phi(Delta) = sum_min tr(OneSided^|Delta| Both^min rho0),
  // folded modulo M.
  std::vector<Complex> kernel(M_, Complex(0.0, 0.0));
  ComplexVector base = rho0;
  for (long long mn = 0; mn < M_; ++mn) {
    if (mn > 0) base = both_ * base;
    ComplexVector walk = base;
    kernel[0] += trace_of_vec(walk, dim_);
    for (long long delta = 1; delta < M_ - mn; ++delta) {
      walk = left_ * walk;
      const Complex t = [&] {
        Complex acc(0, 0);
        for (Index i = 0; i < dim_; ++i) acc += walk(i * dim_ + i);
        return acc;
      }();
      kernel[delta % M_] += t;
      kernel[(M_ - delta % M_) % M_] += std::conj(t);
    }
  }
  Eigen::FFT<double> fft;
  std::vector<Complex> freq;
  fft.fwd(freq, kernel);
  std::vector<double> probs(M_);
  const double scale = 1.0 / (static_cast<double>(M_) * static_cast<double>(M_));
  for (long long k = 0; k < M_; ++k) {
    probs[k] = std::max(freq[k].real() * scale, 0.0);
  }
  return probs;
}

std::pair<double, ComplexMatrix> ControlledEvolution::rotate_and_undo(
    const std::vector<double>& weights) const {
  const Index dd = dim_ * dim_;
  Eigen::FFT<double> fft;

  // g(x) = sum_k r_k e^{2 pi i k x / M}.
  std::vector<Complex> r_complex(M_);
  for (long long k = 0; k < M_; ++k) r_complex[k] = weights[k];
  std::vector<Complex> g;
  fft.fwd(g, r_complex);
  for (auto& v : g) v = std::conj(v);
  std::vector<Complex> g_rev(M_);
  for (long long x = 0; x < M_; ++x) g_rev[x] = g[(M_ - x) % M_];
  std::vector<Complex> g_hat, g_rev_hat;
  fft.fwd(g_hat, g);
  fft.fwd(g_rev_hat, g_rev);

  // T[m] = (1/M^3) sum_{mu, mu'} g(m - mu) g(mu' - m) Fwd[mu, mu'] built per
  // `min` with circular convolutions over the one-sided walk.
  std::vector<ComplexVector> T(M_, ComplexVector::Zero(dd));
  std::vector<std::vector<Complex>> series(dd, std::vector<Complex>(M_));
  std::vector<std::vector<Complex>> conv(dd, std::vector<Complex>(M_));
  std::vector<Complex> freq, tmp;

  const ComplexVector rho0 = vec_of(initial_);
  ComplexVector base = rho0;
  for (long long mn = 0; mn < M_; ++mn) {
    if (mn > 0) base = both_ * base;

    for (int side = 0; side < 2; ++side) {
      // side 0: mu = mn + delta, mu' = mn (delta >= 0), kernel g(m - mu) and
      //         g(mn - m): conv of g with the walk, times g_rev(m - mn).
      // side 1: mu = mn, mu' = mn + delta (delta >= 1), mirrored.
      ComplexVector walk = base;
      const long long d0 = (side == 0) ? 0 : 1;
      if (side == 1) walk = right_ * walk;
      for (auto& s : series)
        std::fill(s.begin(), s.end(), Complex(0.0, 0.0));
      for (long long delta = d0; delta < M_ - mn; ++delta) {
        for (Index e = 0; e < dd; ++e) series[e][delta] = walk(e);
        if (delta + 1 < M_ - mn) {
          walk = (side == 0 ? left_ : right_) * walk;
        }
      }
      for (Index e = 0; e < dd; ++e) {
        fft.fwd(freq, series[e]);
        const auto& ker = (side == 0) ? g_hat : g_rev_hat;
        for (long long x = 0; x < M_; ++x) freq[x] *= ker[x];
        fft.inv(tmp, freq);
        conv[e] = tmp;
      }
      for (long long m = 0; m < M_; ++m) {
        const long long nu = ((m - mn) % M_ + M_) % M_;
        const Complex outer = (side == 0) ? g_rev[nu] : g[nu];
        if (std::abs(outer) < 1e-18) continue;
        ComplexVector add(dd);
        for (Index e = 0; e < dd; ++e) add(e) = outer * conv[e][nu];
        T[m] += add;
      }
    }
  }

  const double norm = 1.0 / (static_cast<double>(M_) * static_cast<double>(M_) *
                             static_cast<double>(M_));
  double success = 0.0;
  for (long long m = 0; m < M_; ++m) {
    T[m] *= norm;
    success += trace_of_vec(T[m], dim_);
  }

  // Undo pass: diagonal register blocks evolve under the reversed inverse
  // applications; Horner over sum_m BothInv^m T[m], then trace the register.
  ComplexVector acc = T[M_ - 1];
  for (long long m = M_ - 2; m >= 0; --m) {
    acc = both_inverse_ * acc;
    acc += T[m];
  }
  return {success, unvec(acc, dim_)};
}

}  // namespace qfit::internal
