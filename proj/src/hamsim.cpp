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

#include "qfit/hamsim.hpp"

#include <cmath>

namespace qfit {

namespace {

// Partial trace over the system factor of a (dim * anc) matrix, keeping the
// ancilla.
ComplexMatrix trace_system(const ComplexMatrix& x, Index dim, Index anc) {
  ComplexMatrix out = ComplexMatrix::Zero(anc, anc);
  for (Index i = 0; i < dim; ++i) {
    out += x.block(i * anc, i * anc, anc, anc);
  }
  return out;
}

ComplexMatrix apply_dme_once(const DmeStep& step, const ComplexMatrix& x,
                             Index dim, Index anc) {
  const double c = std::cos(step.x);
  const double s = std::sin(step.x);
  if (anc == 1) {
    const ComplexMatrix rx = step.rho * x;
    const ComplexMatrix xr = x * step.rho;
    return c * c * x + s * s * x.trace() * step.rho +
           Complex(0.0, c * s) * (rx - xr);
  }
  const ComplexMatrix rho_ext = kron(step.rho, ComplexMatrix::Identity(anc, anc));
  const ComplexMatrix rx = rho_ext * x;
  const ComplexMatrix xr = x * rho_ext;
  return c * c * x + s * s * kron(step.rho, trace_system(x, dim, anc)) +
         Complex(0.0, c * s) * (rx - xr);
}

}  // namespace

void Channel::push(DmeStep step) {
  copies_ += step.count;
  steps_.emplace_back(std::move(step));
}

void Channel::push(UnitaryStep step) { steps_.emplace_back(std::move(step)); }

void Channel::append(const Channel& other) {
  if (other.dim_ != dim_) {
    throw Error(ErrorCode::DimMismatch, "channel dimension mismatch");
  }
  copies_ += other.copies_;
  for (const auto& s : other.steps_) steps_.push_back(s);
}

ComplexMatrix Channel::apply_raw(const ComplexMatrix& x,
                                 Index ancilla_dim) const {
  if (x.rows() != dim_ * ancilla_dim) {
    throw Error(ErrorCode::DimMismatch, "channel input dimension mismatch");
  }
  ComplexMatrix cur = x;
  for (const auto& step : steps_) {
    if (const auto* dme = std::get_if<DmeStep>(&step)) {
      for (long long i = 0; i < dme->count; ++i) {
        cur = apply_dme_once(*dme, cur, dim_, ancilla_dim);
      }
    } else {
      const auto& u = std::get<UnitaryStep>(step).unitary;
      if (ancilla_dim == 1) {
        cur = u * cur * u.adjoint();
      } else {
        const ComplexMatrix u_ext =
            kron(u, ComplexMatrix::Identity(ancilla_dim, ancilla_dim));
        cur = u_ext * cur * u_ext.adjoint();
      }
    }
  }
  return cur;
}

DensityMatrix Channel::apply(const DensityMatrix& rho) const {
  return DensityMatrix::from_matrix(apply_raw(rho.matrix()));
}

ComplexMatrix swap_exponential(Index D, double x) {
  if (D < 1) {
    throw Error(ErrorCode::DimMismatch, "dimension must be >= 1");
  }
  // S^2 = I, so e^{iSx} = cos(x) I + i sin(x) S in closed form.
  ComplexMatrix out =
      std::cos(x) * ComplexMatrix::Identity(D * D, D * D);
  const Complex is(0.0, std::sin(x));
  for (Index i = 0; i < D; ++i) {
    for (Index j = 0; j < D; ++j) {
      out(i * D + j, j * D + i) += is;
    }
  }
  return out;
}

Channel dme_step(const DensityMatrix& rho, double x) {
  if (std::abs(x) > 1.0) {
    throw Error(ErrorCode::BadWeights, "|x| must be <= 1");
  }
  Channel chan(rho.dim());
  chan.push(DmeStep{rho.matrix(), x, 1});
  chan.set_target("E_x, x=" + std::to_string(x));
  return chan;
}

Channel dme_simulate(const DensityMatrix& rho, double t, double eps,
                     const DmeOptions& opts) {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::BadWeights, "t must be finite");
  }
  Channel chan(rho.dim());
  chan.set_target("conjugation by e^{i rho t}, t=" + std::to_string(t));
  chan.set_accuracy(eps);
  if (t == 0.0) return chan;

  const double m_exact = opts.step_constant * t * t / eps;
  if (m_exact > static_cast<double>(opts.step_cap)) {
    throw Error(ErrorCode::BudgetTooLarge,
                "DME needs " + std::to_string(m_exact) +
                    " steps, cap is " + std::to_string(opts.step_cap));
  }
  const long long m = static_cast<long long>(std::ceil(m_exact));
  chan.push(DmeStep{rho.matrix(), t / static_cast<double>(m), m});
  return chan;
}

Channel dme_simulate_robust(const DensityMatrix& rho_approx,
                            const DensityMatrix& rho_true, double t,
                            double eps, const DmeOptions& opts) {
  if (rho_approx.dim() != rho_true.dim()) {
    throw Error(ErrorCode::DimMismatch, "state dimension mismatch");
  }
  const double dist = operator_norm(rho_true.matrix() - rho_approx.matrix());
  if (t != 0.0 && dist > eps / std::abs(t) + 1e-12) {
    throw Error(ErrorCode::HypothesisViolated,
                "||rho - rho'|| = " + std::to_string(dist) +
                    " exceeds eps/|t| = " + std::to_string(eps / std::abs(t)));
  }
  Channel chan = dme_simulate(rho_approx, t, eps, opts);
  chan.set_accuracy(2.0 * eps);  // simulation error + e^{iAt} vs e^{iBt}
  chan.set_target("conjugation by e^{i rho_true t}, t=" + std::to_string(t));
  return chan;
}

std::vector<SuzukiFactor> suzuki_factors(int k, double x) {
  if (k < 1) {
    throw Error(ErrorCode::BadWeights, "order index must be >= 1");
  }
  if (k == 1) {
    return {{true, x / 2.0}, {false, x}, {true, x / 2.0}};
  }
  const double pk = 1.0 / (4.0 - std::pow(4.0, 1.0 / (2.0 * k - 1.0)));
  const auto outer = suzuki_factors(k - 1, pk * x);
  const auto middle = suzuki_factors(k - 1, (1.0 - 4.0 * pk) * x);
  std::vector<SuzukiFactor> out;
  out.reserve(4 * outer.size() + middle.size());
  for (int rep = 0; rep < 2; ++rep) out.insert(out.end(), outer.begin(), outer.end());
  out.insert(out.end(), middle.begin(), middle.end());
  for (int rep = 0; rep < 2; ++rep) out.insert(out.end(), outer.begin(), outer.end());
  return out;
}

Channel suzuki_compose(const DensityMatrix& tau_plus,
                       const DensityMatrix& tau_minus, double t, int k,
                       double delta, const SuzukiOptions& opts) {
  if (delta <= 0.0 || delta >= 1.0) {
    throw Error(ErrorCode::BadWeights, "delta must be in (0, 1)");
  }
  if (tau_plus.dim() != tau_minus.dim()) {
    throw Error(ErrorCode::DimMismatch, "generator dimension mismatch");
  }
  Channel chan(tau_plus.dim());
  chan.set_target("conjugation by e^{i tau t}, t=" + std::to_string(t));
  chan.set_accuracy(delta);
  if (t == 0.0) return chan;

  const double abs_t = std::abs(t);
  const double exponent = 1.0 + 1.0 / (2.0 * k);
  const long long n_steps = static_cast<long long>(std::ceil(
      opts.step_constant * std::pow(abs_t, exponent) *
      std::pow(delta, -1.0 / (2.0 * k))));
  const auto factors = suzuki_factors(k, t / static_cast<double>(n_steps));
  const double n_factors =
      static_cast<double>(n_steps) * static_cast<double>(factors.size());

  // Half the budget covers the splitting error, half is split evenly over
  // the DME realizations of the factors.
  const double per_factor = delta / (2.0 * n_factors);

  double planned_steps = 0.0;
  for (const auto& f : factors) {
    planned_steps += std::ceil(opts.dme.step_constant * f.time * f.time /
                               per_factor);
  }
  planned_steps *= static_cast<double>(n_steps);
  if (planned_steps > static_cast<double>(opts.dme.step_cap)) {
    throw Error(ErrorCode::BudgetTooLarge,
                "Suzuki composition needs " + std::to_string(planned_steps) +
                    " DME steps, cap is " + std::to_string(opts.dme.step_cap));
  }

  DmeOptions dme_opts = opts.dme;
  for (long long s = 0; s < n_steps; ++s) {
    for (const auto& f : factors) {
      // e^{iAx} with A = tau+, or e^{iBx} with B = -tau-.
      if (f.plus) {
        chan.append(dme_simulate(tau_plus, f.time, per_factor, dme_opts));
      } else {
        chan.append(dme_simulate(tau_minus, -f.time, per_factor, dme_opts));
      }
    }
  }
  return chan;
}

std::vector<DensityMatrix> test_battery(Index dim) {
  std::vector<DensityMatrix> states;
  for (Index i = 0; i < dim; ++i) {
    ComplexVector e = ComplexVector::Zero(dim);
    e(i) = 1.0;
    states.push_back(DensityMatrix::pure(StateVector(e)));
  }
  for (Index i = 0; i < dim; ++i) {
    for (Index j = i + 1; j < dim; ++j) {
      ComplexVector re = ComplexVector::Zero(dim);
      re(i) = 1.0 / std::sqrt(2.0);
      re(j) = 1.0 / std::sqrt(2.0);
      states.push_back(DensityMatrix::pure(StateVector(re)));
      ComplexVector im = ComplexVector::Zero(dim);
      im(i) = 1.0 / std::sqrt(2.0);
      im(j) = Complex(0.0, 1.0 / std::sqrt(2.0));
      states.push_back(DensityMatrix::pure(StateVector(im)));
    }
  }
  states.push_back(DensityMatrix::maximally_mixed(dim));
  return states;
}

namespace {

ComplexMatrix max_entangled(Index dim) {
  ComplexVector omega = ComplexVector::Zero(dim * dim);
  for (Index i = 0; i < dim; ++i) {
    omega(i * dim + i) = 1.0 / std::sqrt(static_cast<double>(dim));
  }
  return omega * omega.adjoint();
}

double herm_trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace

double measured_distance(const Channel& chan, const ComplexMatrix& U) {
  double worst = 0.0;
  for (const auto& state : test_battery(chan.dim())) {
    const ComplexMatrix got = chan.apply_raw(state.matrix());
    const ComplexMatrix want = U * state.matrix() * U.adjoint();
    worst = std::max(worst, herm_trace_distance(got, want));
  }
  const ComplexMatrix omega = max_entangled(chan.dim());
  const ComplexMatrix u_ext =
      kron(U, ComplexMatrix::Identity(chan.dim(), chan.dim()));
  worst = std::max(worst,
                   herm_trace_distance(chan.apply_raw(omega, chan.dim()),
                                       u_ext * omega * u_ext.adjoint()));
  return worst;
}

double measured_distance(const Channel& a, const Channel& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimMismatch, "channel dimension mismatch");
  }
  double worst = 0.0;
  for (const auto& state : test_battery(a.dim())) {
    worst = std::max(worst, herm_trace_distance(a.apply_raw(state.matrix()),
                                                b.apply_raw(state.matrix())));
  }
  const ComplexMatrix omega = max_entangled(a.dim());
  worst = std::max(worst, herm_trace_distance(a.apply_raw(omega, a.dim()),
                                              b.apply_raw(omega, b.dim())));
  return worst;
}

}  // namespace qfit
