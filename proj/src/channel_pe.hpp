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

#include <utility>
#include <vector>

#include "qfit/linalg.hpp"

namespace qfit::internal {

/// One species of partial-swap interaction inside a generator application:
/// `count` repetitions of angle `x` against fresh copies of `rho`.
struct InteractionStep {
  ComplexMatrix rho;
  double x = 0.0;
  long long count = 1;
};

/// Register-resolved phase estimation where the controlled unitary is
/// realized by fresh-copy interactions. Register value m undergoes m
/// applications of the interaction sequence; register coherences (m, m')
/// evolve under the two-sided / one-sided maps the shared copies induce.
class ControlledEvolution {
 public:
  /// One application of the controlled generator runs `per_application`
  /// repeated `application_repeats` times (the repeat factor keeps product-
  /// formula step lists compact).
  ControlledEvolution(Index dim, long long register_size,
                      std::vector<InteractionStep> per_application,
                      ComplexMatrix initial_state,
                      long long application_repeats = 1);

  Index dim() const { return dim_; }
  long long register_size() const { return M_; }

  /// Fresh copies consumed by one run of the full circuit.
  long long interaction_slots() const;

  /// Exact Pr[register = k] after the estimation transform.
  std::vector<double> register_distribution() const;

  /// Applies register weights r_k (postselection amplitude per register
  /// value; r_0 = 0 discards the zero branch), undoes the controlled
  /// evolution, and traces out the register. Returns the total success
  /// probability and the unnormalized final system matrix.
  std::pair<double, ComplexMatrix> rotate_and_undo(
      const std::vector<double>& weights) const;

 private:
  ComplexMatrix application_superop(int mode) const;  // see .cpp

  Index dim_;
  long long M_;
  std::vector<InteractionStep> steps_;
  long long repeats_;
  ComplexMatrix initial_;

  // Composite per-application superoperators: both sides active, left only,
  // right only, and the reversed inverse for the undo pass.
  ComplexMatrix both_, left_, right_, both_inverse_;
};

}  // namespace qfit::internal
