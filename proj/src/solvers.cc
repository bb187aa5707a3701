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

#include "mozo/solvers.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "mozo/accountant.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

constexpr double kLambdaGridStep = 1e-4;
constexpr double kConstraintSlack = 1e-9;

}  // namespace

absl::Status BisectionSettings::Validate() const {
  if (!(abs_tolerance > 0.0)) {
    return absl::InvalidArgumentError("bisection tolerance must be positive");
  }
  if (max_iterations < 1) {
    return absl::InvalidArgumentError("bisection needs at least one iteration");
  }
  return absl::OkStatus();
}

absl::Status LambdaBounds::Validate() const {
  if (!(lambda_min >= 0.0) || !(lambda_min < lambda_max) ||
      !std::isfinite(lambda_max)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "invalid lambda bounds [", lambda_min, ", ", lambda_max, "]"));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> BisectMaxFeasible(
    absl::FunctionRef<bool(double)> feasible, double lo, double hi,
    const BisectionSettings& settings) {
  RETURN_IF_ERROR(settings.Validate());
  if (!(lo <= hi)) {
    return absl::InvalidArgumentError(
        absl::StrCat("empty bracket [", lo, ", ", hi, "]"));
  }
  if (!feasible(lo)) {
    return absl::FailedPreconditionError("infeasible at lower bound");
  }
  if (feasible(hi)) return hi;
  // Invariant: feasible(lo) && !feasible(hi).
  for (int i = 0;
       i < settings.max_iterations && hi - lo > settings.abs_tolerance; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

absl::StatusOr<double> GridMaxFeasible(absl::FunctionRef<bool(double)> feasible,
                                       double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi)) {
    return absl::InvalidArgumentError("invalid grid");
  }
  const auto count = static_cast<int64_t>(std::floor((hi - lo) / step + 1e-9));
  for (int64_t i = count; i >= 0; --i) {
    const double x = lo + static_cast<double>(i) * step;
    if (feasible(x)) return x;
  }
  return absl::FailedPreconditionError("infeasible at lower bound");
}

absl::StatusOr<double> SolveLambda(const LogitVector& one_shot,
                                   const LogitVector& zero_shot, double beta,
                                   double alpha, const LambdaBounds& bounds,
                                   const BisectionSettings& settings) {
  RETURN_IF_ERROR(bounds.Validate());
  if (!(beta > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must be > 0, got ", beta));
  }
  ASSIGN_OR_RETURN(const LogProbDist reference, LogSoftmax(zero_shot));
  const double radius = beta * alpha;

  absl::Status error;
  auto feasible = [&](double lambda) {
    auto mixed = MixLogits(one_shot, zero_shot, lambda);
    if (!mixed.ok()) {
      error.Update(mixed.status());
      return false;
    }
    auto divergence = SymmetricRenyiDivergence(*mixed, reference, alpha);
    if (!divergence.ok()) {
      error.Update(divergence.status());
      return false;
    }
    return *divergence <= radius;
  };

  auto lambda = BisectMaxFeasible(feasible, bounds.lambda_min,
                                  bounds.lambda_max, settings);
  RETURN_IF_ERROR(error);
  if (!lambda.ok()) return lambda.status();

  // Re-verify from scratch; a failure means the divergence was not monotone
  // in lambda along the bisection path.
  if (!feasible(*lambda)) {
    RETURN_IF_ERROR(error);
    return GridMaxFeasible(feasible, bounds.lambda_min, bounds.lambda_max,
                           kLambdaGridStep);
  }
  return *lambda;
}

absl::StatusOr<double> SolveBeta(double sampling_rate, int alpha,
                                 double per_step_budget,
                                 const BisectionSettings& settings) {
  if (!(per_step_budget > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("per-step budget must be > 0, got ", per_step_budget));
  }
  absl::Status error;
  auto feasible = [&](double beta) {
    auto curve = MozoCurve(beta);
    if (!curve.ok()) {
      error.Update(curve.status());
      return false;
    }
    auto eps = SubsampledRdp(sampling_rate, alpha, *curve);
    if (!eps.ok()) {
      error.Update(eps.status());
      return false;
    }
    return *eps <= per_step_budget;
  };

  double lo = kBetaBracketStart;
  if (!feasible(lo)) {
    RETURN_IF_ERROR(error);
    return absl::FailedPreconditionError(
        absl::StrCat("budget too small: beta = ", kBetaBracketStart,
                     " already exceeds per-step budget ", per_step_budget));
  }
  double hi = lo;
  while (hi < kBetaBracketCeiling) {
    hi = std::min(2.0 * hi, kBetaBracketCeiling);
    if (!feasible(hi)) break;
    lo = hi;
  }
  RETURN_IF_ERROR(error);
  if (lo >= kBetaBracketCeiling) return kBetaBracketCeiling;
  auto beta = BisectMaxFeasible(feasible, lo, hi, settings);
  RETURN_IF_ERROR(error);
  return beta;
}

}  // namespace mozo
