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

#ifndef MOZO_ACCOUNTANT_H_
#define MOZO_ACCOUNTANT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "mozo/solvers.h"

namespace mozo {

inline constexpr int kMinRenyiOrder = 2;
inline constexpr int kMaxRenyiOrder = 64;

// RDP guarantee of a mechanism as a function of the integer order.
// `epsilon_at_infinity` may be +inf; it is stored explicitly rather than as a
// large sentinel so the min{2, .} factors of the subsampling bound saturate
// exactly.
struct RdpCurve {
  std::function<double(int)> epsilon_at;
  double epsilon_at_infinity = std::numeric_limits<double>::infinity();
};

// Per-token curve of the mixing mechanism: eps(j) = 4 * beta * j. For
// beta = 0 the curve is identically zero, including at infinity.
absl::StatusOr<RdpCurve> MozoCurve(double beta);

// The amplification-by-subsampling bound for sampling without replacement
// at rate q, evaluated as stated for integer alpha >= 2. The j >= 3 sum is
// accumulated in log space with log-gamma binomials.
absl::StatusOr<double> SubsampledRdpBound(double sampling_rate, int alpha,
                                          const RdpCurve& curve);

// RDP of the subsampled mechanism used for accounting:
// min(SubsampledRdpBound, curve(alpha)). The bound alone can exceed the
// unsubsampled curve when q is large and the curve is flat, since its j >= 3
// terms keep a factor of 2 for an unbounded eps(inf).
absl::StatusOr<double> SubsampledRdp(double sampling_rate, int alpha,
                                     const RdpCurve& curve);

// RDP composition: `steps` applications of a mechanism at the same order.
double Compose(double per_step, int64_t steps);

absl::StatusOr<double> RdpToDp(double rdp_epsilon, double alpha, double delta);

// Inverse of RdpToDp. Fails when the order is too aggressive for the target,
// i.e. the resulting RDP budget would be <= 0.
absl::StatusOr<double> DpToRdp(double epsilon, double delta, double alpha);

enum class AlphaRule {
  // Smallest order whose converted RDP budget is at least epsilon / 2.
  kClosestAbove,
  // Order whose converted budget is nearest to epsilon / 2 (ties: smaller).
  kNearest,
};

absl::StatusOr<int> SelectAlpha(double epsilon, double delta,
                                int min_alpha = kMinRenyiOrder,
                                int max_alpha = kMaxRenyiOrder,
                                AlphaRule rule = AlphaRule::kClosestAbove);

struct AccountingInputs {
  double sampling_rate = 0.0;  // n_shots / |D|
  std::optional<int> alpha;    // chosen by SelectAlpha when unset
  int64_t n_test = 1;
  int64_t t_max = 1;
  double epsilon = 1.0;
  double delta = 1e-5;

  int64_t total_steps() const { return n_test * t_max; }
  absl::Status Validate() const;
};

struct BudgetPlan {
  AccountingInputs inputs;
  int alpha = 0;
  double rdp_budget = 0.0;       // converted target, eps tilde
  double per_step_budget = 0.0;  // rdp_budget / (n_test * t_max)
  double beta = 0.0;
  double per_step_rdp = 0.0;      // realized subsampled eps'(alpha) at beta
  double composed_rdp = 0.0;      // per_step_rdp * n_test * t_max
  double realized_epsilon = 0.0;  // composed_rdp converted back to (eps, delta)
};

// Converts the (epsilon, delta) target into an RDP budget, splits it evenly
// across every token step, and calibrates beta. Fails with an internal error
// if the realized end-to-end epsilon would exceed the target.
absl::StatusOr<BudgetPlan> PlanBudget(const AccountingInputs& inputs,
                                      const BisectionSettings& settings = {});

// Privacy actually spent after `steps_executed` token steps under `plan`.
struct SpentBudget {
  int64_t steps_executed = 0;
  double composed_rdp = 0.0;
  double epsilon = 0.0;
};
absl::StatusOr<SpentBudget> SpentAfter(const BudgetPlan& plan,
                                       int64_t steps_executed);

nlohmann::json ToJson(const AccountingInputs& inputs);
nlohmann::json ToJson(const BudgetPlan& plan);

}  // namespace mozo

#endif  // MOZO_ACCOUNTANT_H_
