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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qfit/primitives.hpp"
#include "qfit/problem.hpp"
#include "qfit/stateprep.hpp"

namespace qfit {

enum class Backend { Spectral, Channel };
enum class PeMode { Idealized, Faithful };

struct ResourceCaps {
  long long channel_steps = 1000000;   // DME steps per generator application
  long long ae_applications = 100000;  // Grover applications per estimation
  int pe_bits_spectral = 24;           // register width for statistics sums
  int pe_bits_statevec = 20;           // register width for state tracking
  int pe_bits_channel = 12;            // register width for the channel backend
};

struct QuantumFitConfig {
  double epsilon = 0.1;
  double confidence_delta = 1.0 / 3.0;
  Backend backend = Backend::Spectral;
  PeMode pe_mode = PeMode::Faithful;
  // Backend for the sign-determination stage; unset follows `backend`. The
  // sign gadget doubles the dimensions and tightens the register budget
  // beyond what the channel backend can track at desk scale, so channel runs
  // may opt the sign stage into the spectral backend explicitly.
  std::optional<Backend> sign_backend;
  std::uint64_t seed = 0;
  int suzuki_order = 1;
  ResourceCaps caps;

  double phi_floor = 0.05;           // refuse norm/direction estimation below
  double precision_constant = 0.25;  // constant inside the O(.) budgets
  int pe_boost_rounds = 15;          // coherent repetitions inside estimators

  void validate() const;
};

/// Aggregated work counters. Oracle queries are per preparation circuit;
/// amplitude-estimation applications multiply circuits; DME copies count
/// fresh-state interactions in the channel backend.
struct CostCounters {
  long long oracle_F_queries = 0;
  long long oracle_y_queries = 0;
  long long ae_applications = 0;
  long long pe_unitary_applications = 0;
  long long dme_copies = 0;
  long long preparation_circuits = 0;

  CostCounters& operator+=(const CostCounters& other);
};

/// The prepared direction state: the d-dimensional reduced density matrix in
/// solution coordinates, with the postselection bookkeeping of the final
/// normal form sqrt(p)|1>|0>|theta'>|phi> + ...
struct ThetaBarState {
  Index d = 0;
  ComplexMatrix coord_density;   // d x d, unit trace
  double success_prob = 0.0;     // raw postselection probability
  double good_branch_prob = 0.0; // p: amplified success x in-branch weight
  double accuracy = 0.0;         // trace-distance budget
  RealVector sector_weights;     // per-sector |coeff|^2 ||masked vector||^2
  CostCounters cost;
};

struct EntryEstimate {
  double magnitude = 0.0;
  int sign = +1;
  bool below_threshold = false;
  EstimationOutcome magnitude_outcome;
};

struct FitEstimate {
  EstimationOutcome phi;
  EstimationOutcome theta_norm;
  RealVector theta_bar_hat;
  RealVector theta_hat;
  std::vector<EntryEstimate> per_entry;
  CostCounters cost;

  // Classical-oracle diagnostics.
  ClassicalFit classical;
  double phi_deviation = 0.0;
  double theta_norm_relative_error = 0.0;
  double theta_bar_error = 0.0;
  double theta_error = 0.0;
};

/// Estimator engine for one fitting instance. Spectral quantities and
/// prepared direction states are cached across calls; all randomness comes
/// from the Rng handles passed to each estimator, so one engine serves many
/// seeded runs. Not safe for concurrent calls on one instance.
class QuantumFitEngine {
 public:
  QuantumFitEngine(FitProblem problem, QuantumFitConfig config);
  ~QuantumFitEngine();

  const FitProblem& problem() const { return problem_; }
  const QuantumFitConfig& config() const { return config_; }
  const ClassicalFit& classical() const { return classical_; }

  /// Additive estimate of the fit quality, |phi' - phi| <= eps w.p. >= 2/3.
  EstimationOutcome estimate_phi(double eps, Rng& rng) const;

  /// Relative estimate of ||theta||, error <= eps w.p. >= 2/3.
  EstimationOutcome estimate_theta_norm(double eps, Rng& rng) const;

  /// Deterministic preparation of the direction state to accuracy eps.
  const ThetaBarState& prepare_theta_bar(double eps) const;

  /// Additive estimate of |theta_bar_j|, error O(eps) w.p. >= 2/3.
  EstimationOutcome estimate_abs_entry(Index j, double eps, Rng& rng) const;

  /// Sign of theta_bar_j, correct w.p. >= 2/3 provided |theta_bar_j| >=
  /// threshold.
  int determine_sign(Index j, double threshold, Rng& rng) const;

  /// Entrywise direction estimate with ||estimate - theta_bar|| <= eps w.p.
  /// >= 2/3 (or 1 - overall_failure when given).
  RealVector estimate_theta_bar_full(
      double eps, Rng& rng,
      std::optional<double> overall_failure = std::nullopt,
      std::vector<EntryEstimate>* per_entry = nullptr) const;

  /// Full composition: fit quality, norm, direction, theta = norm *
  /// direction, with classical diagnostics and cost accounting.
  FitEstimate full_fit(Rng& rng) const;

  /// Measurement amplitudes behind the estimators (exact, pre-sampling);
  /// exposed for verification. The norm amplitude depends on the relative
  /// target through the register precision.
  double phi_amplitude() const;
  double norm_amplitude() const { return norm_amplitude(config_.epsilon); }
  double norm_amplitude(double eps) const;

  CostCounters cost_snapshot() const { return cost_; }

 private:
  struct ChannelCache;

  double phi_amplitude_spectral() const;
  double norm_amplitude_spectral(double eps) const;
  double phi_amplitude_channel() const;
  double norm_amplitude_channel(double eps) const;
  ThetaBarState prepare_theta_bar_spectral(double eps) const;
  ThetaBarState prepare_theta_bar_channel(double eps) const;
  QuantumFitEngine& augmented_engine(double norm_estimate) const;
  const QuantumFitEngine& sign_stage_engine() const;
  int boost_rounds_for(double failure) const;

  FitProblem problem_;
  QuantumFitConfig config_;
  ClassicalFit classical_;
  RealVector alphas_;       // projections of y onto the left singular vectors
  double residual_norm2_;   // 1 - phi

  mutable CostCounters cost_;
  mutable std::optional<double> phi_amplitude_cache_;
  mutable std::map<std::uint64_t, double> norm_amplitude_cache_;
  mutable std::map<std::uint64_t, ThetaBarState> theta_bar_cache_;
  mutable std::map<std::uint64_t, std::unique_ptr<QuantumFitEngine>>
      augmented_cache_;
  mutable std::unique_ptr<QuantumFitEngine> sign_stage_engine_;
  mutable std::unique_ptr<ChannelCache> channel_cache_;
};

// Free-function forms of the estimator operations.
EstimationOutcome estimate_phi(const FitProblem& p, double eps,
                               const QuantumFitConfig& cfg);
EstimationOutcome estimate_theta_norm(const FitProblem& p, double eps,
                                      const QuantumFitConfig& cfg);
ThetaBarState prepare_theta_bar(const FitProblem& p, double eps,
                                const QuantumFitConfig& cfg);
EstimationOutcome estimate_abs_entry(const FitProblem& p, Index j, double eps,
                                     const QuantumFitConfig& cfg);
int determine_sign(const FitProblem& p, Index j, double threshold,
                   const QuantumFitConfig& cfg);
RealVector estimate_theta_bar_full(const FitProblem& p, double eps,
                                   const QuantumFitConfig& cfg);
FitEstimate full_fit(const FitProblem& p, const QuantumFitConfig& cfg);

}  // namespace qfit
