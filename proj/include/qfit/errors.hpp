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

#include <stdexcept>
#include <string>

namespace qfit {

enum class ErrorCode {
  // input / parse failures
  ParseError,
  DimensionMismatch,
  // precondition failures
  RankDeficient,
  ZeroInput,
  ZeroRow,
  NotHermitian,
  DimMismatch,
  BadFactorization,
  BadDimension,
  BadWeights,
  PhiTooSmall,
  HypothesisViolated,
  // resource failures
  BudgetTooLarge,
  NonConvergence,
  ResourceCap,
};

// Process exit classes used by the CLI: parse=2, precondition=3, resource=4.
inline int exit_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::DimensionMismatch:
      return 2;
    case ErrorCode::BudgetTooLarge:
    case ErrorCode::NonConvergence:
    case ErrorCode::ResourceCap:
      return 4;
    default:
      return 3;
  }
}

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroInput: return "ZeroInput";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::BadFactorization: return "BadFactorization";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::PhiTooSmall: return "PhiTooSmall";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::BudgetTooLarge: return "BudgetTooLarge";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ResourceCap: return "ResourceCap";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qfit
