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

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qfit/errors.hpp"
#include "qfit/rng.hpp"

namespace qfit {

// ---------------------------------------------------------------------------
// Phase estimation
// ---------------------------------------------------------------------------

struct PhaseEstimationConfig {
  int register_bits = 8;
  double target_precision = 0.0;  // radians
  double failure_budget = 1.0 / 3.0;
  int boost_rounds = 1;

  long long register_size() const { return 1LL << register_bits; }

  /// Width = ceil(log2(2 pi / precision)) + 2 guard bits; boost rounds grow
  /// logarithmically in 1/delta.
  static PhaseEstimationConfig for_precision(double precision, double delta);
};

/// Canonical register distribution Pr[k | theta] for an M-point register,
/// theta in [0, 2 pi). Exact phase 0 yields k = 0 with probability 1.
double pe_prob(double theta, long long M, long long k);

double pe_prob_zero(double theta, long long M);

/// Nearest register bin to theta (the idealized-PE outcome).
long long pe_nearest_bin(double theta, long long M);

/// Exact sample from the canonical distribution.
long long pe_sample(double theta, long long M, Rng& rng);

/// Median of `rounds` independent canonical samples, taken in the frame
/// centered on the distribution peak so wraparound cannot split the cluster.
long long pe_sample_median(double theta, long long M, int rounds, Rng& rng);

/// E[f(k)] where k follows the canonical distribution for theta, median-
/// boosted over `rounds` repetitions (rounds odd; rounds == 1 is the raw
/// distribution). Exact up to ~1e-15 truncation of the boosted tails.
double pe_expectation(double theta, long long M, int rounds,
                      const std::function<double(long long)>& f);

struct PhaseSample {
  long long register_value = 0;
  std::size_t component = 0;
};

/// Samples a spectral component (eigenphase, weight) by weight, then the
/// register outcome for that component's phase.
PhaseSample phase_estimate(
    const std::vector<std::pair<double, double>>& spectrum,
    const PhaseEstimationConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Amplitude amplification / estimation
// ---------------------------------------------------------------------------

struct AmplifyCost {
  int rounds = 1;                // parallel base-amplifier instances
  long long repetitions = 0;     // applications of A and A^-1
  double final_success = 0.0;    // >= 1 - delta
};

/// Cost schedule for raising success probability alpha to >= 1 - delta.
AmplifyCost amplitude_amplify_cost(double alpha, double delta);

struct EstimationOutcome {
  double value = 0.0;
  long long repetitions_used = 0;
  double claimed_error = 0.0;
  double claimed_confidence = 0.0;
  std::vector<std::uint64_t> seed_trace;
};

/// |p' - p| <= eps with probability >= 2/3, using ceil(pi/eps) Grover
/// applications; the outcome is sampled from the exact estimation
/// distribution around arcsin(sqrt(p)).
EstimationOutcome amplitude_estimate_additive(double true_p, double eps,
                                              Rng& rng);

/// |p' - p| <= eps * p with probability >= 2/3. Doubling schedule with a
/// confirmation stage; throws NonConvergence past `cap` applications.
EstimationOutcome amplitude_estimate_multiplicative(double true_p, double eps,
                                                    Rng& rng,
                                                    long long cap = 100000);

/// Median of `rounds` (odd) independent outcomes. Also serves as majority
/// vote when outcomes are +-1.
EstimationOutcome boost_median(
    const std::function<EstimationOutcome(Rng&)>& estimator, int rounds,
    Rng& rng);

/// P(Binomial(n, q) >= m).
double binomial_tail(int n, double q, int m);

}  // namespace qfit
