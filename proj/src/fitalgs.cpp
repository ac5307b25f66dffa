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

#include "qfit/fitalgs.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "channel_pe.hpp"
#include "qfit/hamsim.hpp"

namespace qfit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t double_key(double v) {
  std::uint64_t k;
  std::memcpy(&k, &v, sizeof(k));
  return k;
}

// Signed register eigenvalue: values above half range wrap to negatives.
double signed_lambda(long long k, long long M) {
  const double raw = kTwoPi * static_cast<double>(k) / static_cast<double>(M);
  return (k <= M / 2) ? raw : raw - kTwoPi;
}

// Amplitude of the controlled rotation a |z|^{1/2} / z on register value
// lambda, clipped into [-1, 1]; the zero branch gets no amplitude.
double rotation_amplitude(double lambda, double a) {
  if (lambda == 0.0) return 0.0;
  const double mag = std::min(1.0, a / std::sqrt(std::abs(lambda)));
  return lambda > 0.0 ? mag : -mag;
}

// Register amplitude <k| PE |phase theta>, exact closed form.
Complex register_amplitude(double theta, long long M, long long k) {
  const double rel = theta - kTwoPi * static_cast<double>(k) /
                                 static_cast<double>(M);
  const double half = 0.5 * rel;
  const double s = std::sin(half);
  double ratio;
  if (std::abs(s) < 1e-15) {
    ratio = 1.0;
  } else {
    ratio = std::sin(static_cast<double>(M) * half) /
            (static_cast<double>(M) * s);
  }
  const double arg = (static_cast<double>(M) - 1.0) * half;
  return Complex(std::cos(arg), std::sin(arg)) * ratio;
}

int register_bits_for(double precision, int cap, const char* who) {
  const int bits =
      static_cast<int>(std::ceil(std::log2(kTwoPi / precision))) + 2;
  if (bits > cap) {
    throw Error(ErrorCode::ResourceCap,
                std::string(who) + " needs a " + std::to_string(bits) +
                    "-bit estimation register, cap is " + std::to_string(cap));
  }
  return bits;
}

}  // namespace

void QuantumFitConfig::validate() const {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw Error(ErrorCode::BadWeights, "epsilon must be in (0, 1)");
  }
  if (confidence_delta <= 0.0 || confidence_delta >= 0.5) {
    throw Error(ErrorCode::BadWeights, "confidence delta must be in (0, 1/2)");
  }
  if (suzuki_order < 1) {
    throw Error(ErrorCode::BadWeights, "Suzuki order must be >= 1");
  }
  if (pe_boost_rounds < 1 || pe_boost_rounds % 2 == 0) {
    throw Error(ErrorCode::BadWeights, "PE boost rounds must be odd");
  }
  if (precision_constant <= 0.0 || precision_constant > 1.0) {
    throw Error(ErrorCode::BadWeights, "precision constant must be in (0, 1]");
  }
}

CostCounters& CostCounters::operator+=(const CostCounters& other) {
  oracle_F_queries += other.oracle_F_queries;
  oracle_y_queries += other.oracle_y_queries;
  ae_applications += other.ae_applications;
  pe_unitary_applications += other.pe_unitary_applications;
  dme_copies += other.dme_copies;
  preparation_circuits += other.preparation_circuits;
  return *this;
}

// ---------------------------------------------------------------------------
// Channel-backend plumbing
// ---------------------------------------------------------------------------

struct QuantumFitEngine::ChannelCache {
  // Register distributions keyed by (register size, steps-per-application).
  std::map<std::pair<long long, long long>, std::vector<double>> sigma_dist;
};

namespace {

// The per-generator interaction budget must stay under the channel-step cap.
void check_channel_steps(double steps, long long cap, const char* who) {
  if (steps > static_cast<double>(cap)) {
    throw Error(ErrorCode::ResourceCap,
                std::string(who) + " needs " + std::to_string(steps) +
                    " DME steps per application, cap is " +
                    std::to_string(cap));
  }
}

void check_block_work(long long M, Index dim, const char* who) {
  const double work = static_cast<double>(M) * static_cast<double>(M) *
                      std::pow(static_cast<double>(dim), 4);
  if (work > 7e10) {
    throw Error(ErrorCode::ResourceCap,
                std::string(who) +
                    ": register-block simulation too large (M^2 dim^4 = " +
                    std::to_string(work) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

QuantumFitEngine::QuantumFitEngine(FitProblem problem, QuantumFitConfig config)
    : problem_(std::move(problem)), config_(std::move(config)) {
  config_.validate();
  classical_ = classical_fit(problem_);
  alphas_ = RealVector(problem_.d());
  for (Index j = 0; j < problem_.d(); ++j) {
    alphas_(j) = problem_.spectral.left_vectors.col(j).dot(problem_.y);
  }
  residual_norm2_ = 1.0 - classical_.phi;
}

QuantumFitEngine::~QuantumFitEngine() = default;

int QuantumFitEngine::boost_rounds_for(double failure) const {
  for (int rounds = 1;; rounds += 2) {
    if (binomial_tail(rounds, 1.0 / 3.0, (rounds + 1) / 2) <= failure) {
      return rounds;
    }
  }
}

// ---------------------------------------------------------------------------
// Fit-quality amplitude: probability of a nonzero estimation register after
// phase estimation on the sigma evolution applied to |y>.
// ---------------------------------------------------------------------------

double QuantumFitEngine::phi_amplitude_spectral() const {
  if (config_.pe_mode == PeMode::Idealized) return classical_.phi;
  const double precision =
      config_.precision_constant /
      (static_cast<double>(problem_.d()) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_spectral,
                                     "fit-quality estimation");
  const long long M = 1LL << bits;
  double q = 0.0;
  for (Index j = 0; j < problem_.d(); ++j) {
    const double theta = std::pow(problem_.spectral.singular_values(j), 2);
    const double leak = pe_expectation(
        theta, M, config_.pe_boost_rounds,
        [](long long k) { return k == 0 ? 1.0 : 0.0; });
    q += alphas_(j) * alphas_(j) * (1.0 - leak);
  }
  // The residual branch has exact eigenphase zero and never leaves the zero
  // register.
  return q;
}

double QuantumFitEngine::phi_amplitude_channel() const {
  const Index n = problem_.n();
  const double precision =
      config_.precision_constant /
      (static_cast<double>(problem_.d()) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_channel,
                                     "fit-quality estimation (channel)");
  const long long M = 1LL << bits;
  check_block_work(M, n, "fit-quality estimation");

  const double sim_budget = config_.precision_constant * config_.epsilon;
  const double per_app = sim_budget / static_cast<double>(M - 1);
  const double steps = std::ceil(4.0 / per_app);
  check_channel_steps(steps, config_.caps.channel_steps,
                      "fit-quality estimation");
  const long long K = static_cast<long long>(steps);

  if (!channel_cache_) channel_cache_ = std::make_unique<ChannelCache>();
  auto key = std::make_pair(M, K);
  auto it = channel_cache_->sigma_dist.find(key);
  if (it == channel_cache_->sigma_dist.end()) {
    const DensityMatrix sigma =
        prepare_sigma(problem_, std::min(0.5, per_app)).mixed();
    std::vector<internal::InteractionStep> steps_list = {
        {sigma.matrix(), 1.0 / static_cast<double>(K), K}};
    internal::ControlledEvolution evo(
        n, M, std::move(steps_list),
        ComplexMatrix(problem_.y.cast<Complex>() *
                      problem_.y.cast<Complex>().transpose()));
    cost_.dme_copies += evo.interaction_slots();
    cost_.oracle_F_queries += 4 * problem_.d() * evo.interaction_slots();
    it = channel_cache_->sigma_dist.emplace(key, evo.register_distribution())
             .first;
  }
  double q = 0.0;
  for (std::size_t k = 1; k < it->second.size(); ++k) q += it->second[k];
  return q;
}

double QuantumFitEngine::phi_amplitude() const {
  if (!phi_amplitude_cache_) {
    phi_amplitude_cache_ = config_.backend == Backend::Spectral
                               ? phi_amplitude_spectral()
                               : phi_amplitude_channel();
  }
  return *phi_amplitude_cache_;
}

// ---------------------------------------------------------------------------
// Norm amplitude: probability that the a/sqrt(z) rotation fires.
// ---------------------------------------------------------------------------

double QuantumFitEngine::norm_amplitude_spectral(double eps) const {
  const double a = problem_.a;
  if (config_.pe_mode == PeMode::Idealized) {
    double q = 0.0;
    for (Index j = 0; j < problem_.d(); ++j) {
      const double sj = problem_.spectral.singular_values(j);
      q += alphas_(j) * alphas_(j) * (a / sj) * (a / sj);
    }
    return q;
  }
  const double precision =
      config_.precision_constant * eps /
      (static_cast<double>(problem_.d()) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_spectral,
                                     "norm estimation");
  const long long M = 1LL << bits;
  double q = 0.0;
  for (Index j = 0; j < problem_.d(); ++j) {
    const double theta = std::pow(problem_.spectral.singular_values(j), 2);
    q += alphas_(j) * alphas_(j) *
         pe_expectation(theta, M, config_.pe_boost_rounds, [&](long long k) {
           if (k == 0) return 0.0;
           const double lambda =
               kTwoPi * static_cast<double>(k) / static_cast<double>(M);
           const double r = std::min(1.0, a / std::sqrt(lambda));
           return r * r;
         });
  }
  return q;
}

double QuantumFitEngine::norm_amplitude_channel(double eps) const {
  const Index n = problem_.n();
  const double a = problem_.a;
  const double precision =
      config_.precision_constant * eps /
      (static_cast<double>(problem_.d()) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_channel,
                                     "norm estimation (channel)");
  const long long M = 1LL << bits;
  check_block_work(M, n, "norm estimation");

  const double sim_budget = config_.precision_constant * eps *
                            classical_.phi / (problem_.kappa * problem_.kappa);
  const double per_app = sim_budget / static_cast<double>(M - 1);
  const double steps = std::ceil(4.0 / per_app);
  check_channel_steps(steps, config_.caps.channel_steps, "norm estimation");
  const long long K = static_cast<long long>(steps);

  if (!channel_cache_) channel_cache_ = std::make_unique<ChannelCache>();
  auto key = std::make_pair(M, K);
  auto it = channel_cache_->sigma_dist.find(key);
  if (it == channel_cache_->sigma_dist.end()) {
    const DensityMatrix sigma =
        prepare_sigma(problem_, std::min(0.5, per_app)).mixed();
    std::vector<internal::InteractionStep> steps_list = {
        {sigma.matrix(), 1.0 / static_cast<double>(K), K}};
    internal::ControlledEvolution evo(
        n, M, std::move(steps_list),
        ComplexMatrix(problem_.y.cast<Complex>() *
                      problem_.y.cast<Complex>().transpose()));
    cost_.dme_copies += evo.interaction_slots();
    cost_.oracle_F_queries += 4 * problem_.d() * evo.interaction_slots();
    it = channel_cache_->sigma_dist.emplace(key, evo.register_distribution())
             .first;
  }
  double q = 0.0;
  for (long long k = 1; k < M; ++k) {
    const double lambda = kTwoPi * static_cast<double>(k) /
                          static_cast<double>(M);
    const double r = std::min(1.0, a / std::sqrt(lambda));
    q += r * r * it->second[k];
  }
  return q;
}

double QuantumFitEngine::norm_amplitude(double eps) const {
  const std::uint64_t key = double_key(eps);
  auto it = norm_amplitude_cache_.find(key);
  if (it == norm_amplitude_cache_.end()) {
    const double q = config_.backend == Backend::Spectral
                         ? norm_amplitude_spectral(eps)
                         : norm_amplitude_channel(eps);
    it = norm_amplitude_cache_.emplace(key, q).first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Top-level estimators
// ---------------------------------------------------------------------------

EstimationOutcome QuantumFitEngine::estimate_phi(double eps, Rng& rng) const {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  const long long M_ae =
      static_cast<long long>(std::ceil(std::numbers::pi / eps));
  if (M_ae > config_.caps.ae_applications) {
    throw Error(ErrorCode::ResourceCap,
                "fit-quality estimation needs " + std::to_string(M_ae) +
                    " amplitude-estimation applications");
  }
  const double q = phi_amplitude();
  EstimationOutcome out = amplitude_estimate_additive(q, eps, rng);
  out.claimed_error = eps;
  cost_.ae_applications += out.repetitions_used;
  cost_.preparation_circuits += 2 * out.repetitions_used;
  cost_.oracle_y_queries += 2 * out.repetitions_used;
  return out;
}

EstimationOutcome QuantumFitEngine::estimate_theta_norm(double eps,
                                                        Rng& rng) const {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  if (classical_.phi < config_.phi_floor) {
    throw Error(ErrorCode::PhiTooSmall,
                "fit quality " + std::to_string(classical_.phi) +
                    " is below the floor " +
                    std::to_string(config_.phi_floor));
  }
  const double q = norm_amplitude(eps);
  EstimationOutcome out = amplitude_estimate_multiplicative(
      q, eps, rng, config_.caps.ae_applications);
  cost_.ae_applications += out.repetitions_used;
  cost_.preparation_circuits += 2 * out.repetitions_used;
  cost_.oracle_y_queries += 2 * out.repetitions_used;
  out.value = std::sqrt(std::max(out.value, 0.0)) / problem_.a;
  out.claimed_error = eps;
  return out;
}

// ---------------------------------------------------------------------------
// Direction-state preparation
// ---------------------------------------------------------------------------

ThetaBarState QuantumFitEngine::prepare_theta_bar_spectral(double eps) const {
  const Index d = problem_.d();
  const double a = problem_.a;
  ThetaBarState state;
  state.d = d;
  state.accuracy = eps;

  if (config_.pe_mode == PeMode::Idealized) {
    const RealVector& tb = classical_.theta_bar;
    state.coord_density = (tb * tb.transpose()).cast<Complex>();
    double q = 0.0;
    state.sector_weights = RealVector(2 * d);
    for (Index j = 0; j < d; ++j) {
      const double sj = problem_.spectral.singular_values(j);
      const double w =
          alphas_(j) * alphas_(j) * (a / sj) * (a / sj) / 2.0;
      state.sector_weights(2 * j) = w;
      state.sector_weights(2 * j + 1) = w;
      q += 2.0 * w;
    }
    state.success_prob = q;
    const AmplifyCost amp = amplitude_amplify_cost(q, eps / 4.0);
    state.good_branch_prob = amp.final_success;
    state.cost.preparation_circuits = amp.repetitions;
    return state;
  }

  const double precision =
      config_.precision_constant * eps /
      (static_cast<double>(d) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_statevec,
                                     "direction preparation");
  const long long M = 1LL << bits;

  // Sector s = (j, +-): eigenphase +-s_j^2, weight alpha_j / sqrt(2) with the
  // minus branch carrying a negative coefficient. The postselected register
  // content per sector is c_k(theta) * r(lambda_k) masked off k = 0; undoing
  // phase estimation leaves the sector vectors' Gram matrix as the system
  // coherence.
  const Index n_sectors = 2 * d;
  std::vector<double> phases(n_sectors);
  std::vector<double> coeffs(n_sectors);
  for (Index j = 0; j < d; ++j) {
    const double s2 = std::pow(problem_.spectral.singular_values(j), 2);
    phases[2 * j] = s2;
    coeffs[2 * j] = alphas_(j) / std::sqrt(2.0);
    phases[2 * j + 1] = kTwoPi - s2;
    coeffs[2 * j + 1] = -alphas_(j) / std::sqrt(2.0);
  }

  Eigen::FFT<double> fft;
  std::vector<std::vector<Complex>> fourier(n_sectors);
  state.sector_weights = RealVector(n_sectors);
  double q_total = 0.0;
  {
    std::vector<Complex> v(M);
    for (Index s = 0; s < n_sectors; ++s) {
      double norm2 = 0.0;
      v[0] = 0.0;  // zero-register branch discarded
      for (long long k = 1; k < M; ++k) {
        const double r = rotation_amplitude(signed_lambda(k, M), a);
        const Complex amp = register_amplitude(phases[s], M, k) * r;
        v[k] = amp;
        norm2 += std::norm(amp);
      }
      state.sector_weights(s) = coeffs[s] * coeffs[s] * norm2;
      q_total += state.sector_weights(s);
      fft.inv(fourier[s], v);
    }
  }

  ComplexMatrix gram(n_sectors, n_sectors);
  for (Index s = 0; s < n_sectors; ++s) {
    for (Index t = 0; t <= s; ++t) {
      const double dphi = phases[s] - phases[t];
      // G[s,t] = M * sum_m conj(w_t[m]) e^{i m (theta_t - theta_s)} w_s[m];
      // phases enter as theta_t - theta_s = -dphi.
      const Complex rot(std::cos(dphi), -std::sin(dphi));
      Complex phase(1.0, 0.0);
      Complex acc(0.0, 0.0);
      for (long long m = 0; m < M; ++m) {
        acc += std::conj(fourier[t][m]) * phase * fourier[s][m];
        phase *= rot;
        if ((m & 0xfff) == 0xfff) phase /= std::abs(phase);
      }
      gram(s, t) = acc * static_cast<double>(M);
      gram(t, s) = std::conj(gram(s, t));
    }
  }

  ComplexMatrix rho_v = ComplexMatrix::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index jp = 0; jp < d; ++jp) {
      Complex sum(0.0, 0.0);
      for (int sa = 0; sa < 2; ++sa) {
        for (int sb = 0; sb < 2; ++sb) {
          sum += coeffs[2 * j + sa] * coeffs[2 * jp + sb] *
                 gram(2 * j + sa, 2 * jp + sb);
        }
      }
      rho_v(j, jp) = sum / 2.0;
    }
  }
  // Solution coordinates: rotate from the right-singular-vector basis.
  const ComplexMatrix vbasis = problem_.spectral.right_vectors.cast<Complex>();
  ComplexMatrix rho = vbasis * rho_v * vbasis.adjoint();
  rho = (rho + rho.adjoint()) / 2.0;
  const double good = rho.trace().real();

  state.coord_density = rho / good;
  state.success_prob = q_total;
  const AmplifyCost amp = amplitude_amplify_cost(q_total, eps / 4.0);
  state.good_branch_prob = amp.final_success * (good / q_total);
  state.cost.preparation_circuits = amp.repetitions;
  state.cost.pe_unitary_applications = (M - 1) * 2;
  return state;
}

ThetaBarState QuantumFitEngine::prepare_theta_bar_channel(double eps) const {
  const Index d = problem_.d();
  const Index n = problem_.n();
  const Index dim = 2 * n;
  const double a = problem_.a;

  const double precision =
      config_.precision_constant * eps /
      (static_cast<double>(d) * problem_.kappa * problem_.kappa);
  const int bits = register_bits_for(precision, config_.caps.pe_bits_channel,
                                     "direction preparation (channel)");
  const long long M = 1LL << bits;
  check_block_work(M, dim, "direction preparation");

  // Total generator budget, halved between the forward and undo passes.
  const double sim_budget = config_.precision_constant * eps *
                            classical_.phi / (problem_.kappa * problem_.kappa);
  const double per_app = sim_budget / (2.0 * static_cast<double>(M - 1));

  // Each application realizes e^{i tau} by a Suzuki product over tau+ / tau-
  // with every factor DME-simulated.
  const int k = config_.suzuki_order;
  const long long outer = static_cast<long long>(
      std::ceil(2.0 * std::pow(per_app, -1.0 / (2.0 * k))));
  const auto factors = suzuki_factors(k, 1.0 / static_cast<double>(outer));
  const double per_factor =
      per_app / (2.0 * static_cast<double>(outer) *
                 static_cast<double>(factors.size()));

  const DensityMatrix tau_plus = prepare_tau(problem_, +1, 0.5).mixed();
  const DensityMatrix tau_minus = prepare_tau(problem_, -1, 0.5).mixed();

  std::vector<internal::InteractionStep> steps;
  double planned = 0.0;
  for (const auto& f : factors) {
    const double time = f.plus ? f.time : -f.time;
    const long long m =
        static_cast<long long>(std::ceil(4.0 * time * time / per_factor));
    planned += static_cast<double>(m);
    steps.push_back({f.plus ? tau_plus.matrix() : tau_minus.matrix(),
                     time / static_cast<double>(m), m});
  }
  planned *= static_cast<double>(outer);
  check_channel_steps(planned, config_.caps.channel_steps,
                      "direction preparation");

  ComplexVector init = ComplexVector::Zero(dim);
  init.tail(n) = problem_.y.cast<Complex>();
  internal::ControlledEvolution evo(dim, M, std::move(steps),
                                    ComplexMatrix(init * init.adjoint()),
                                    outer);
  cost_.dme_copies += 2 * evo.interaction_slots();
  cost_.oracle_F_queries += 8 * problem_.d() * evo.interaction_slots();

  std::vector<double> weights(M, 0.0);
  for (long long reg = 1; reg < M; ++reg) {
    weights[reg] = rotation_amplitude(signed_lambda(reg, M), a);
  }
  auto [q_total, sys] = evo.rotate_and_undo(weights);

  // Good branch: flag qubit |0>, solution support in the first d coords.
  ComplexMatrix rho = sys.topLeftCorner(d, d);
  rho = (rho + rho.adjoint()) / 2.0;
  const double good = rho.trace().real();

  ThetaBarState state;
  state.d = d;
  state.accuracy = eps;
  state.coord_density = rho / good;
  state.success_prob = q_total;
  const AmplifyCost amp = amplitude_amplify_cost(q_total, eps / 4.0);
  state.good_branch_prob = amp.final_success * (good / q_total);
  state.cost.preparation_circuits = amp.repetitions;
  state.cost.dme_copies = 2 * evo.interaction_slots();
  return state;
}

const ThetaBarState& QuantumFitEngine::prepare_theta_bar(double eps) const {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  if (classical_.phi < config_.phi_floor) {
    throw Error(ErrorCode::PhiTooSmall,
                "fit quality " + std::to_string(classical_.phi) +
                    " is below the floor " +
                    std::to_string(config_.phi_floor));
  }
  const std::uint64_t key = double_key(eps);
  auto it = theta_bar_cache_.find(key);
  if (it == theta_bar_cache_.end()) {
    ThetaBarState state = config_.backend == Backend::Spectral
                              ? prepare_theta_bar_spectral(eps)
                              : prepare_theta_bar_channel(eps);
    it = theta_bar_cache_.emplace(key, std::move(state)).first;
  }
  return it->second;
}

EstimationOutcome QuantumFitEngine::estimate_abs_entry(Index j, double eps,
                                                       Rng& rng) const {
  if (j < 0 || j >= problem_.d()) {
    throw Error(ErrorCode::DimMismatch, "entry index out of range");
  }
  const ThetaBarState& state = prepare_theta_bar(eps);
  const double qj = state.good_branch_prob *
                    state.coord_density(j, j).real();
  // eps^2-additive estimation of q_j gives an eps-additive magnitude via
  // |sqrt(q') - sqrt(q)| <= sqrt(|q' - q|).
  const double ae_eps = std::max(eps * eps, 1e-9);
  const long long M_ae =
      static_cast<long long>(std::ceil(std::numbers::pi / ae_eps));
  if (M_ae > config_.caps.ae_applications) {
    throw Error(ErrorCode::ResourceCap,
                "entry-magnitude estimation needs " + std::to_string(M_ae) +
                    " amplitude-estimation applications");
  }
  EstimationOutcome out =
      amplitude_estimate_additive(std::clamp(qj, 0.0, 1.0), ae_eps, rng);
  cost_.ae_applications += out.repetitions_used;
  cost_.preparation_circuits += 2 * out.repetitions_used;
  out.value = std::sqrt(std::max(out.value, 0.0));
  out.claimed_error = eps;
  return out;
}

QuantumFitEngine& QuantumFitEngine::augmented_engine(
    double norm_estimate) const {
  const std::uint64_t key = double_key(norm_estimate);
  auto it = augmented_cache_.find(key);
  if (it == augmented_cache_.end()) {
    const SignGadget gadget = build_sign_gadget(problem_, norm_estimate);
    QuantumFitConfig aug_config = config_;
    aug_config.backend = config_.sign_backend.value_or(config_.backend);
    it = augmented_cache_
             .emplace(key, std::make_unique<QuantumFitEngine>(gadget.augmented,
                                                              aug_config))
             .first;
  }
  return *it->second;
}

const QuantumFitEngine& QuantumFitEngine::sign_stage_engine() const {
  const Backend sign = config_.sign_backend.value_or(config_.backend);
  if (sign == config_.backend) return *this;
  if (!sign_stage_engine_) {
    QuantumFitConfig cfg = config_;
    cfg.backend = sign;
    sign_stage_engine_ = std::make_unique<QuantumFitEngine>(problem_, cfg);
  }
  return *sign_stage_engine_;
}

int QuantumFitEngine::determine_sign(Index j, double threshold,
                                     Rng& rng) const {
  if (j < 0 || j >= problem_.d()) {
    throw Error(ErrorCode::DimMismatch, "entry index out of range");
  }
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw Error(ErrorCode::BadWeights, "threshold must be in (0, 1)");
  }
  const Index d = problem_.d();

  // Norm estimate to relative threshold/4, boosted so its failure stays a
  // small fraction of the sign budget. The whole sign stage, this estimate
  // included, runs on the sign backend.
  const QuantumFitEngine& norm_engine = sign_stage_engine();
  Rng norm_rng = rng.fork(1);
  const int norm_rounds = boost_rounds_for(1.0 / 12.0);
  const EstimationOutcome norm_est = boost_median(
      [&](Rng& r) { return norm_engine.estimate_theta_norm(threshold / 4.0, r); },
      norm_rounds, norm_rng);
  if (&norm_engine != this) {
    cost_.ae_applications += norm_est.repetitions_used;
    cost_.preparation_circuits += 2 * norm_est.repetitions_used;
  }

  // Snap the estimate onto a threshold/16 relative grid: the perturbation is
  // inside the gadget's tolerance and lets repeated rounds share one
  // augmented engine.
  const double grid = threshold / 16.0;
  const double snapped =
      std::exp(std::round(std::log(norm_est.value) / grid) * grid);
  QuantumFitEngine& aug = augmented_engine(snapped);
  const ThetaBarState& state = aug.prepare_theta_bar(threshold);

  // Probability of the |+_j> = (|j> + |d+1>)/sqrt(2) outcome, conditioned on
  // the good branch: (theta''_j + theta''_{d+1})^2 / 2 for a pure state.
  const ComplexMatrix& rho = state.coord_density;
  const double q = 0.5 * (rho(j, j).real() + rho(d, d).real() +
                          2.0 * rho(j, d).real());

  Rng ae_rng = rng.fork(2);
  const EstimationOutcome est = amplitude_estimate_additive(
      std::clamp(q, 0.0, 1.0), threshold / 8.0, ae_rng);
  cost_.ae_applications += est.repetitions_used;
  cost_.preparation_circuits += 2 * est.repetitions_used;
  cost_ += state.cost;
  return est.value > 0.25 ? +1 : -1;
}

RealVector QuantumFitEngine::estimate_theta_bar_full(
    double eps, Rng& rng, std::optional<double> overall_failure,
    std::vector<EntryEstimate>* per_entry) const {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  const Index d = problem_.d();
  const double eps_entry = eps / (8.0 * std::sqrt(static_cast<double>(d)));
  const double failure = overall_failure.value_or(1.0 / 3.0);
  const double per_step_failure = failure / (2.0 * static_cast<double>(d));
  const int rounds = boost_rounds_for(per_step_failure);

  RealVector estimate(d);
  for (Index j = 0; j < d; ++j) {
    Rng entry_rng = rng.fork(static_cast<std::uint64_t>(j));
    Rng mag_rng = entry_rng.fork(0);
    const EstimationOutcome mag = boost_median(
        [&](Rng& r) { return estimate_abs_entry(j, eps_entry, r); }, rounds,
        mag_rng);

    EntryEstimate entry;
    entry.magnitude = mag.value;
    entry.magnitude_outcome = mag;
    if (mag.value >= eps_entry) {
      Rng sign_rng = entry_rng.fork(1);
      const EstimationOutcome vote = boost_median(
          [&](Rng& r) {
            EstimationOutcome o;
            o.value = static_cast<double>(determine_sign(j, eps_entry, r));
            return o;
          },
          rounds, sign_rng);
      entry.sign = vote.value >= 0.0 ? +1 : -1;
    } else {
      // Below threshold the sign is unknowable; fixed to + for
      // reproducibility.
      entry.sign = +1;
      entry.below_threshold = true;
    }
    estimate(j) = entry.sign * entry.magnitude;
    if (per_entry) per_entry->push_back(std::move(entry));
  }
  return estimate;
}

FitEstimate QuantumFitEngine::full_fit(Rng& rng) const {
  const double eps = config_.epsilon;
  const double stage_failure = config_.confidence_delta / 3.0;
  const int rounds = boost_rounds_for(stage_failure);
  const CostCounters cost_before = cost_;

  FitEstimate fit;
  fit.classical = classical_;

  Rng phi_rng = rng.fork(1);
  fit.phi = boost_median(
      [&](Rng& r) { return estimate_phi(eps, r); }, rounds, phi_rng);
  if (fit.phi.value < config_.phi_floor) {
    throw Error(ErrorCode::PhiTooSmall,
                "measured fit quality " + std::to_string(fit.phi.value) +
                    " is below the floor " +
                    std::to_string(config_.phi_floor));
  }

  Rng norm_rng = rng.fork(2);
  fit.theta_norm = boost_median(
      [&](Rng& r) { return estimate_theta_norm(eps, r); }, rounds, norm_rng);

  Rng dir_rng = rng.fork(3);
  fit.theta_bar_hat =
      estimate_theta_bar_full(eps, dir_rng, stage_failure, &fit.per_entry);

  fit.theta_hat = fit.theta_norm.value * fit.theta_bar_hat;

  fit.phi_deviation = std::abs(fit.phi.value - classical_.phi);
  fit.theta_norm_relative_error =
      classical_.theta_norm > 0.0
          ? std::abs(fit.theta_norm.value - classical_.theta_norm) /
                classical_.theta_norm
          : 0.0;
  fit.theta_bar_error = (fit.theta_bar_hat - classical_.theta_bar).norm();
  fit.theta_error = (fit.theta_hat - classical_.theta_hat).norm();

  fit.cost = cost_;
  fit.cost.oracle_F_queries -= cost_before.oracle_F_queries;
  fit.cost.oracle_y_queries -= cost_before.oracle_y_queries;
  fit.cost.ae_applications -= cost_before.ae_applications;
  fit.cost.pe_unitary_applications -= cost_before.pe_unitary_applications;
  fit.cost.dme_copies -= cost_before.dme_copies;
  fit.cost.preparation_circuits -= cost_before.preparation_circuits;
  return fit;
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

EstimationOutcome estimate_phi(const FitProblem& p, double eps,
                               const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.estimate_phi(eps, rng);
}

EstimationOutcome estimate_theta_norm(const FitProblem& p, double eps,
                                      const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.estimate_theta_norm(eps, rng);
}

ThetaBarState prepare_theta_bar(const FitProblem& p, double eps,
                                const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  return engine.prepare_theta_bar(eps);
}

EstimationOutcome estimate_abs_entry(const FitProblem& p, Index j, double eps,
                                     const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.estimate_abs_entry(j, eps, rng);
}

int determine_sign(const FitProblem& p, Index j, double threshold,
                   const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.determine_sign(j, threshold, rng);
}

RealVector estimate_theta_bar_full(const FitProblem& p, double eps,
                                   const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.estimate_theta_bar_full(eps, rng);
}

FitEstimate full_fit(const FitProblem& p, const QuantumFitConfig& cfg) {
  QuantumFitEngine engine(p, cfg);
  Rng rng(cfg.seed);
  return engine.full_fit(rng);
}

}  // namespace qfit
