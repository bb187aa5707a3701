// Copyright 2026 The Mozo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOZO_SOLVERS_H_
#define MOZO_SOLVERS_H_

#include "absl/functional/function_ref.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/dist.h"

namespace mozo {

struct BisectionSettings {
  double abs_tolerance = 1e-6;
  int max_iterations = 100;

  absl::Status Validate() const;
};

// Box constraint on the mixing weight of each one-shot distribution.
struct LambdaBounds {
  double lambda_min = 0.0;
  double lambda_max = 1.5;

  absl::Status Validate() const;
};

// Largest x in [lo, hi] for which `feasible` holds, assuming infeasibility is
// monotone (once false, false for every larger x). The result x satisfies
// feasible(x) and either x >= hi - tol or feasible(x + tol) is false.
absl::StatusOr<double> BisectMaxFeasible(
    absl::FunctionRef<bool(double)> feasible, double lo, double hi,
    const BisectionSettings& settings);

// Largest grid point lo + i * step in [lo, hi] with feasible() true, scanning
// the whole grid. Used when the bisection answer fails re-verification.
absl::StatusOr<double> GridMaxFeasible(absl::FunctionRef<bool(double)> feasible,
                                       double lo, double hi, double step);

// Largest mixing weight lambda in bounds such that the mixed distribution
// stays within symmetric Renyi divergence beta * alpha of softmax(zero_shot).
// Both logit vectors must already be truncated to the same support.
absl::StatusOr<double> SolveLambda(const LogitVector& one_shot,
                                   const LogitVector& zero_shot, double beta,
                                   double alpha,
                                   const LambdaBounds& bounds = {},
                                   const BisectionSettings& settings = {});

inline constexpr double kBetaBracketStart = 1e-6;
inline constexpr double kBetaBracketCeiling = 10.0;

// Largest beta whose subsampled per-token RDP at the given integer order does
// not exceed `per_step_budget`. The bracket doubles from 1e-6 and is capped at
// 10.
absl::StatusOr<double> SolveBeta(double sampling_rate, int alpha,
                                 double per_step_budget,
                                 const BisectionSettings& settings = {});

}  // namespace mozo

#endif  // MOZO_SOLVERS_H_
