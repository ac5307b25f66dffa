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

#include <string>
#include <variant>
#include <vector>

#include "qfit/linalg.hpp"

namespace qfit {

/// One partial-swap interaction with a fresh copy of rho:
/// X -> tr_copy(e^{iSx} (rho (x) X) e^{-iSx})
///    = cos^2(x) X + sin^2(x) rho tr(X) + i cos(x) sin(x) [rho, X],
/// applied `count` times. Consumes `count` copies of rho.
struct DmeStep {
  ComplexMatrix rho;
  double x = 0.0;
  long long count = 1;
};

/// Exact conjugation X -> U X U^dagger.
struct UnitaryStep {
  ComplexMatrix unitary;
};

/// A trace-preserving map built from partial-swap interactions and exact
/// unitary conjugations. Values are immutable after construction; applying a
/// channel is pure. Channels extend to system (x) ancilla inputs, which the
/// test battery uses for an entangled probe.
class Channel {
 public:
  explicit Channel(Index dim) : dim_(dim) {}

  Index dim() const { return dim_; }
  double accuracy() const { return accuracy_; }
  long long copies_consumed() const { return copies_; }
  const std::string& target() const { return target_; }

  void set_accuracy(double a) { accuracy_ = a; }
  void set_target(std::string t) { target_ = std::move(t); }

  void push(DmeStep step);
  void push(UnitaryStep step);
  void append(const Channel& other);

  DensityMatrix apply(const DensityMatrix& rho) const;

  /// Action on a (dim * ancilla_dim)-dimensional matrix; the channel acts on
  /// the first factor.
  ComplexMatrix apply_raw(const ComplexMatrix& x, Index ancilla_dim = 1) const;

 private:
  Index dim_;
  double accuracy_ = 0.0;
  long long copies_ = 0;
  std::string target_;
  std::vector<std::variant<DmeStep, UnitaryStep>> steps_;
};

/// e^{iSx} = cos(x) I + i sin(x) S on dim D^2, S the swap operator.
ComplexMatrix swap_exponential(Index D, double x);

/// Single interaction channel E_x; consumes one copy of rho.
Channel dme_step(const DensityMatrix& rho, double x);

struct DmeOptions {
  double step_constant = 4.0;     // m = ceil(c t^2 / eps)
  long long step_cap = 1000000;   // BudgetTooLarge beyond this
};

/// E_{t/m}^m with m = ceil(c t^2 / eps): approximates conjugation by
/// e^{i rho t} to trace distance <= eps on the test battery.
Channel dme_simulate(const DensityMatrix& rho, double t, double eps,
                     const DmeOptions& opts = {});

/// dme_simulate on an approximate copy source. Requires
/// ||rho_true - rho_approx|| <= eps / |t| (operator norm); the combined error
/// against conjugation by e^{i rho_true t} stays O(eps).
Channel dme_simulate_robust(const DensityMatrix& rho_approx,
                            const DensityMatrix& rho_true, double t,
                            double eps, const DmeOptions& opts = {});

struct SuzukiOptions {
  double step_constant = 2.0;  // outer steps = ceil(c t^{1+1/2k} delta^{-1/2k})
  DmeOptions dme;
};

/// One factor of the expanded product formula: e^{+i tau+ time} (plus) or
/// e^{-i tau- time} (minus); `time` already carries the recursion weights.
struct SuzukiFactor {
  bool plus = true;
  double time = 0.0;
};

/// Expands S_{2k}(x) recursively into generator factors.
/// k = 1: e^{iAx/2} e^{iBx} e^{iAx/2}; higher orders use the standard
/// p_k = (4 - 4^{1/(2k-1)})^{-1} recursion.
std::vector<SuzukiFactor> suzuki_factors(int k, double x);

/// Approximates conjugation by e^{i tau t}, tau = tau+ - tau-, by splitting t
/// into outer steps, expanding each into Suzuki factors and realizing every
/// factor with dme_simulate on the matching copy source.
Channel suzuki_compose(const DensityMatrix& tau_plus,
                       const DensityMatrix& tau_minus, double t, int k,
                       double delta, const SuzukiOptions& opts = {});

/// Canonical probe states: computational basis, pairwise real and imaginary
/// superpositions, the maximally mixed state, and one maximally entangled
/// state with an equal-dimension ancilla (handled inside measured_distance).
std::vector<DensityMatrix> test_battery(Index dim);

/// max over the battery of D(channel(state), U state U^dagger), including the
/// entangled probe. Lower-bounds the channel distance to the target unitary.
double measured_distance(const Channel& chan, const ComplexMatrix& U);

/// Same battery distance between two channels.
double measured_distance(const Channel& a, const Channel& b);

}  // namespace qfit
