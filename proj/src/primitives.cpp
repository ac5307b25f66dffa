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

#include "qfit/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qfit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

// Signed register offset of k from center, in (-M/2, M/2].
long long wrapped_offset(long long k, long long center, long long M) {
  long long o = (k - center) % M;
  if (o <= -M / 2) o += M;
  if (o > M / 2) o -= M;
  return o;
}

}  // namespace

PhaseEstimationConfig PhaseEstimationConfig::for_precision(double precision,
                                                           double delta) {
  if (precision <= 0.0 || precision > kTwoPi) {
    throw Error(ErrorCode::BadWeights, "invalid phase-estimation precision");
  }
  PhaseEstimationConfig cfg;
  cfg.target_precision = precision;
  cfg.failure_budget = delta;
  cfg.register_bits =
      static_cast<int>(std::ceil(std::log2(kTwoPi / precision))) + 2;
  int rounds = static_cast<int>(std::ceil(3.0 * std::log(1.0 / delta)));
  rounds = std::max(rounds, 1);
  if (rounds % 2 == 0) ++rounds;
  cfg.boost_rounds = rounds;
  return cfg;
}

double pe_prob(double theta, long long M, long long k) {
  const double delta = wrap_phase(theta) - kTwoPi * static_cast<double>(k) /
                                               static_cast<double>(M);
  const double half = 0.5 * delta;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-15) return 1.0;
  const double num = std::sin(static_cast<double>(M) * half);
  const double amp = num / (static_cast<double>(M) * s);
  return amp * amp;
}

double pe_prob_zero(double theta, long long M) { return pe_prob(theta, M, 0); }

long long pe_nearest_bin(double theta, long long M) {
  const double t = wrap_phase(theta);
  long long k = static_cast<long long>(
      std::llround(t * static_cast<double>(M) / kTwoPi));
  return k % M;
}

long long pe_sample(double theta, long long M, Rng& rng) {
  const double t = wrap_phase(theta);
  if (t == 0.0) return 0;
  const long long center = pe_nearest_bin(t, M);
  const double u = rng.uniform();
  // Walk bins outward from the peak; the distribution mass decays
  // quadratically so the expected number of visits is O(log M).
  long double acc = 0.0L;
  long long last = center;
  for (long long step = 0; step < M; ++step) {
    long long offset = (step % 2 == 0) ? step / 2 : -(step / 2 + 1);
    long long k = ((center + offset) % M + M) % M;
    acc += pe_prob(t, M, k);
    last = k;
    if (acc >= u) return k;
  }
  return last;
}

long long pe_sample_median(double theta, long long M, int rounds, Rng& rng) {
  if (rounds <= 1) return pe_sample(theta, M, rng);
  const long long center = pe_nearest_bin(theta, M);
  std::vector<long long> offsets;
  offsets.reserve(rounds);
  for (int r = 0; r < rounds; ++r) {
    offsets.push_back(wrapped_offset(pe_sample(theta, M, rng), center, M));
  }
  std::nth_element(offsets.begin(), offsets.begin() + rounds / 2,
                   offsets.end());
  long long med = offsets[rounds / 2];
  return ((center + med) % M + M) % M;
}

double binomial_tail(int n, double q, int m) {
  if (m <= 0) return 1.0;
  if (m > n) return 0.0;
  q = std::clamp(q, 0.0, 1.0);
  if (q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;
  // First pmf term in log space (the raw coefficient overflows for large n),
  // then the ratio recursion.
  const double log_term = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) -
                          std::lgamma(n - m + 1.0) + m * std::log(q) +
                          (n - m) * std::log(1.0 - q);
  double term = std::exp(log_term);
  double sum = term;
  for (int k = m; k < n; ++k) {
    if (term == 0.0) break;
    term *= static_cast<double>(n - k) / static_cast<double>(k + 1);
    term *= q / (1.0 - q);
    sum += term;
  }
  return std::min(sum, 1.0);
}

double pe_expectation(double theta, long long M, int rounds,
                      const std::function<double(long long)>& f) {
  const double t = wrap_phase(theta);
  if (t == 0.0) return f(0);
  if (rounds <= 1) {
    long double acc = 0.0L;
    for (long long k = 0; k < M; ++k) {
      const double p = pe_prob(t, M, k);
      if (p > 0.0) acc += p * f(k);
    }
    return static_cast<double>(acc);
  }

  // Median-boosted distribution: walk bins in ascending offset order from the
  // peak, tracking the CDF; the median lands at offset o with probability
  // T(F(o)) - T(F(o-)) where T(q) = P(Bin(rounds, q) >= (rounds+1)/2).
  const long long center = pe_nearest_bin(t, M);
  const int need = (rounds + 1) / 2;
  // Below this single-sample mass the boosted tail is < ~1e-18.
  const double q_skip = std::pow(1e-18, 1.0 / static_cast<double>(need));

  long double cdf = 0.0L;
  double tail_prev = 0.0;  // T(F) at the previous bin boundary
  long double acc = 0.0L;
  for (long long o = -M / 2 + 1; o <= M / 2; ++o) {
    const long long k = ((center + o) % M + M) % M;
    cdf += pe_prob(t, M, k);
    const double F = static_cast<double>(std::min(cdf, (long double)1.0));
    double tail_cur;
    if (F < q_skip) {
      tail_cur = 0.0;
    } else if (1.0 - F < q_skip) {
      tail_cur = 1.0;
    } else {
      tail_cur = binomial_tail(rounds, F, need);
    }
    const double p_med = tail_cur - tail_prev;
    if (p_med > 0.0) acc += p_med * f(k);
    tail_prev = tail_cur;
    if (tail_prev >= 1.0) break;
  }
  return static_cast<double>(acc);
}

PhaseSample phase_estimate(
    const std::vector<std::pair<double, double>>& spectrum,
    const PhaseEstimationConfig& cfg, Rng& rng) {
  if (spectrum.empty()) {
    throw Error(ErrorCode::BadWeights, "empty spectrum");
  }
  double total = 0.0;
  for (const auto& [phase, weight] : spectrum) {
    if (weight < -1e-12 || phase < 0.0 || phase >= kTwoPi) {
      throw Error(ErrorCode::BadWeights, "invalid spectral component");
    }
    total += weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error(ErrorCode::BadWeights, "spectral weights must sum to 1");
  }

  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t j = spectrum.size() - 1;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    acc += spectrum[i].second;
    if (acc >= u) {
      j = i;
      break;
    }
  }
  PhaseSample out;
  out.component = j;
  out.register_value = pe_sample_median(spectrum[j].first, cfg.register_size(),
                                        cfg.boost_rounds, rng);
  return out;
}

AmplifyCost amplitude_amplify_cost(double alpha, double delta) {
  if (alpha <= 0.0 || alpha > 1.0) {
    throw Error(ErrorCode::BadWeights, "alpha must be in (0, 1]");
  }
  if (delta <= 0.0 || delta >= 1.0) {
    throw Error(ErrorCode::BadWeights, "delta must be in (0, 1)");
  }
  AmplifyCost cost;
  cost.rounds = std::max(
      1, static_cast<int>(std::ceil(std::log(1.0 / delta) / std::log(3.0))));
  cost.repetitions =
      static_cast<long long>(std::ceil(std::log2(3.0 / delta))) *
      static_cast<long long>(std::ceil(1.0 / std::sqrt(alpha)));
  cost.final_success = 1.0 - std::pow(1.0 / 3.0, cost.rounds);
  return cost;
}

EstimationOutcome amplitude_estimate_additive(double true_p, double eps,
                                              Rng& rng) {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  true_p = std::clamp(true_p, 0.0, 1.0);
  const long long M =
      static_cast<long long>(std::ceil(std::numbers::pi / eps));

  const double theta_p = std::asin(std::sqrt(true_p));
  double omega = 2.0 * theta_p;  // Grover eigenphase
  if (omega > 0.0 && rng.uniform() < 0.5) omega = kTwoPi - omega;

  const long long k = pe_sample(omega, M, rng);
  const double est = std::pow(
      std::sin(std::numbers::pi * static_cast<double>(k) /
               static_cast<double>(M)),
      2);

  EstimationOutcome out;
  out.value = est;
  out.repetitions_used = M;
  out.claimed_error = eps;
  out.claimed_confidence = 2.0 / 3.0;
  out.seed_trace = {rng.seed()};
  return out;
}

EstimationOutcome amplitude_estimate_multiplicative(double true_p, double eps,
                                                    Rng& rng, long long cap) {
  if (eps <= 0.0 || eps >= 1.0) {
    throw Error(ErrorCode::BadWeights, "eps must be in (0, 1)");
  }
  EstimationOutcome out;
  out.claimed_error = eps;
  out.claimed_confidence = 2.0 / 3.0;

  // One-bin slip of the register moves the estimate by at most
  // (2 sqrt(q(1-q)) + pi/M) * pi/M around q.
  auto bin_error = [](double q, long long M) {
    const double u = std::numbers::pi / static_cast<double>(M);
    return (2.0 * std::sqrt(std::max(q * (1.0 - q), 0.0)) + u) * u;
  };

  long long total = 0;
  long long M = 8;
  double est = 0.0;
  double err = 1.0;
  std::uint64_t salt = 0;
  // Double the grid until the one-bin error is safely below eps * (estimate
  // lower bound), then confirm with a fresh estimate at the final size.
  while (true) {
    if (total + M > cap) {
      throw Error(ErrorCode::NonConvergence,
                  "amplitude estimation exceeded the application cap of " +
                      std::to_string(cap));
    }
    Rng sub = rng.fork(salt++);
    out.seed_trace.push_back(sub.seed());
    est = amplitude_estimate_additive(
              true_p, std::numbers::pi / static_cast<double>(M), sub)
              .value;
    total += M;
    err = bin_error(est, M);
    if (err <= eps * (est - err)) break;
    M *= 2;
  }
  // pi/M_final <= sqrt(lower) (sqrt(1+eps) - 1) makes the one-bin error at
  // most eps * lower <= eps * p.
  const double lower = std::max(est - err, 1e-12);
  const long long M_final = static_cast<long long>(
      std::ceil(std::numbers::pi /
                (std::sqrt(lower) * (std::sqrt(1.0 + eps) - 1.0))));
  if (total + M_final > cap) {
    throw Error(ErrorCode::NonConvergence,
                "amplitude estimation exceeded the application cap of " +
                    std::to_string(cap));
  }
  Rng sub = rng.fork(salt++);
  out.seed_trace.push_back(sub.seed());
  out.value =
      amplitude_estimate_additive(true_p, std::numbers::pi / M_final, sub)
          .value;
  total += M_final;
  out.repetitions_used = total;
  return out;
}

EstimationOutcome boost_median(
    const std::function<EstimationOutcome(Rng&)>& estimator, int rounds,
    Rng& rng) {
  if (rounds < 1 || rounds % 2 == 0) {
    throw Error(ErrorCode::BadWeights, "boost rounds must be odd");
  }
  std::vector<EstimationOutcome> outcomes;
  outcomes.reserve(rounds);
  EstimationOutcome out;
  for (int r = 0; r < rounds; ++r) {
    Rng sub = rng.fork(static_cast<std::uint64_t>(r));
    out.seed_trace.push_back(sub.seed());
    outcomes.push_back(estimator(sub));
    out.repetitions_used += outcomes.back().repetitions_used;
  }
  std::vector<double> values;
  values.reserve(rounds);
  for (const auto& o : outcomes) values.push_back(o.value);
  std::nth_element(values.begin(), values.begin() + rounds / 2, values.end());
  out.value = values[rounds / 2];
  out.claimed_error = outcomes.front().claimed_error;
  // Median fails only if more than half the rounds fail; per-round failure
  // is at most 1/3.
  out.claimed_confidence =
      1.0 - binomial_tail(rounds, 1.0 / 3.0, (rounds + 1) / 2);
  return out;
}

}  // namespace qfit
