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

#include "mozo/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "absl/strings/str_cat.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

constexpr double kLog2 = 0.69314718055994530942;

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log(min{2, (e^{eps_inf} - 1)^j}).
double LogSaturatedFactor(double eps_infinity, int j) {
  if (eps_infinity == std::numeric_limits<double>::infinity()) return kLog2;
  const double base = std::expm1(eps_infinity);
  if (base <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::min(kLog2, j * std::log(base));
}

absl::Status CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

absl::Status CheckOrder(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Renyi order must be finite and > 1, got ", alpha));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<RdpCurve> MozoCurve(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must be finite and >= 0, got ", beta));
  }
  RdpCurve curve;
  curve.epsilon_at = [beta](int j) { return 4.0 * beta * j; };
  curve.epsilon_at_infinity =
      beta == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return curve;
}

absl::StatusOr<double> SubsampledRdpBound(double sampling_rate, int alpha,
                                          const RdpCurve& curve) {
  if (alpha < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "subsampling bound needs integer alpha >= 2, got ", alpha));
  }
  if (!(sampling_rate > 0.0 && sampling_rate < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling rate must lie in (0, 1), got ", sampling_rate));
  }
  const double log_q = std::log(sampling_rate);
  const double eps_inf = curve.epsilon_at_infinity;

  // Log of every term inside log(1 + ...), excluding the leading 1.
  std::vector<double> terms;
  terms.reserve(alpha);

  const double eps2 = curve.epsilon_at(2);
  const double log_first = std::log(4.0) + std::log(std::expm1(eps2));
  const double log_second = eps2 + LogSaturatedFactor(eps_inf, 2);
  const double log_min2 = std::min(log_first, log_second);
  if (log_min2 != -std::numeric_limits<double>::infinity()) {
    terms.push_back(2.0 * log_q + LogBinomial(alpha, 2) + log_min2);
  }
  for (int j = 3; j <= alpha; ++j) {
    const double log_factor = LogSaturatedFactor(eps_inf, j);
    if (log_factor == -std::numeric_limits<double>::infinity()) continue;
    terms.push_back(j * log_q + LogBinomial(alpha, j) +
                    (j - 1) * curve.epsilon_at(j) + log_factor);
  }
  if (terms.empty()) return 0.0;

  const double max_term = *std::max_element(terms.begin(), terms.end());
  double log_total;
  if (max_term <= 0.0) {
    // log1p keeps full relative precision when the sum is tiny.
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t);
    log_total = std::log1p(sum);
  } else {
    double sum = std::exp(-max_term);
    for (double t : terms) sum += std::exp(t - max_term);
    log_total = max_term + std::log(sum);
  }
  return log_total / (alpha - 1);
}

absl::StatusOr<double> SubsampledRdp(double sampling_rate, int alpha,
                                     const RdpCurve& curve) {
  ASSIGN_OR_RETURN(const double bound,
                   SubsampledRdpBound(sampling_rate, alpha, curve));
  return std::min(bound, curve.epsilon_at(alpha));
}

double Compose(double per_step, int64_t steps) {
  return static_cast<double>(steps) * per_step;
}

absl::StatusOr<double> RdpToDp(double rdp_epsilon, double alpha, double delta) {
  RETURN_IF_ERROR(CheckOrder(alpha));
  RETURN_IF_ERROR(CheckDelta(delta));
  return rdp_epsilon + std::log((alpha - 1.0) / alpha) -
         (std::log(delta) + std::log(alpha)) / (alpha - 1.0);
}

absl::StatusOr<double> DpToRdp(double epsilon, double delta, double alpha) {
  RETURN_IF_ERROR(CheckOrder(alpha));
  RETURN_IF_ERROR(CheckDelta(delta));
  const double rdp = epsilon - std::log((alpha - 1.0) / alpha) +
                     (std::log(delta) + std::log(alpha)) / (alpha - 1.0);
  if (!(rdp > 0.0)) {
    return absl::FailedPreconditionError(
        absl::StrCat("order too aggressive for target budget: alpha = ", alpha,
                     " leaves RDP budget ", rdp));
  }
  return rdp;
}

absl::StatusOr<int> SelectAlpha(double epsilon, double delta, int min_alpha,
                                int max_alpha, AlphaRule rule) {
  if (min_alpha < kMinRenyiOrder || max_alpha > kMaxRenyiOrder ||
      min_alpha > max_alpha) {
    return absl::InvalidArgumentError(absl::StrCat(
        "order range [", min_alpha, ", ", max_alpha, "] not within [",
        kMinRenyiOrder, ", ", kMaxRenyiOrder, "]"));
  }
  RETURN_IF_ERROR(CheckDelta(delta));
  const double target = epsilon / 2.0;
  std::optional<int> nearest, above;
  double nearest_gap = 0.0, above_gap = 0.0;
  for (int alpha = min_alpha; alpha <= max_alpha; ++alpha) {
    auto rdp = DpToRdp(epsilon, delta, alpha);
    if (!rdp.ok()) continue;
    const double gap = *rdp - target;
    if (!nearest || std::abs(gap) < nearest_gap) {
      nearest = alpha;
      nearest_gap = std::abs(gap);
    }
    if (gap >= 0.0 && (!above || gap < above_gap)) {
      above = alpha;
      above_gap = gap;
    }
  }
  if (!nearest) {
    return absl::FailedPreconditionError(
        absl::StrCat("no feasible Renyi order in [", min_alpha, ", ", max_alpha,
                     "] for epsilon = ", epsilon, ", delta = ", delta));
  }
  if (rule == AlphaRule::kClosestAbove && above) return *above;
  return *nearest;
}

absl::Status AccountingInputs::Validate() const {
  if (!(sampling_rate > 0.0 && sampling_rate < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling rate must lie in (0, 1), got ", sampling_rate));
  }
  RETURN_IF_ERROR(CheckDelta(delta));
  if (n_test < 1 || t_max < 1) {
    return absl::InvalidArgumentError("n_test and T_max must be >= 1");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and > 0, got ", epsilon));
  }
  if (alpha && (*alpha < kMinRenyiOrder || *alpha > kMaxRenyiOrder)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be an integer in [", kMinRenyiOrder, ", ",
                     kMaxRenyiOrder, "], got ", *alpha));
  }
  return absl::OkStatus();
}

absl::StatusOr<BudgetPlan> PlanBudget(const AccountingInputs& inputs,
                                      const BisectionSettings& settings) {
  RETURN_IF_ERROR(inputs.Validate());
  BudgetPlan plan;
  plan.inputs = inputs;
  if (inputs.alpha) {
    plan.alpha = *inputs.alpha;
  } else {
    ASSIGN_OR_RETURN(plan.alpha, SelectAlpha(inputs.epsilon, inputs.delta));
  }
  ASSIGN_OR_RETURN(plan.rdp_budget,
                   DpToRdp(inputs.epsilon, inputs.delta, plan.alpha));
  plan.per_step_budget =
      plan.rdp_budget / static_cast<double>(inputs.total_steps());
  ASSIGN_OR_RETURN(plan.beta, SolveBeta(inputs.sampling_rate, plan.alpha,
                                        plan.per_step_budget, settings));
  ASSIGN_OR_RETURN(const RdpCurve curve, MozoCurve(plan.beta));
  ASSIGN_OR_RETURN(plan.per_step_rdp,
                   SubsampledRdp(inputs.sampling_rate, plan.alpha, curve));
  plan.composed_rdp = Compose(plan.per_step_rdp, inputs.total_steps());
  ASSIGN_OR_RETURN(plan.realized_epsilon,
                   RdpToDp(plan.composed_rdp, plan.alpha, inputs.delta));
  if (plan.realized_epsilon > inputs.epsilon) {
    return absl::InternalError(
        absl::StrCat("planned budget overshoots target: realized epsilon ",
                     plan.realized_epsilon, " > ", inputs.epsilon));
  }
  return plan;
}

absl::StatusOr<SpentBudget> SpentAfter(const BudgetPlan& plan,
                                       int64_t steps_executed) {
  if (steps_executed < 0) {
    return absl::InvalidArgumentError("negative step count");
  }
  SpentBudget spent;
  spent.steps_executed = steps_executed;
  spent.composed_rdp = Compose(plan.per_step_rdp, steps_executed);
  if (steps_executed == 0) return spent;  // nothing released
  ASSIGN_OR_RETURN(spent.epsilon,
                   RdpToDp(spent.composed_rdp, plan.alpha, plan.inputs.delta));
  return spent;
}

nlohmann::json ToJson(const AccountingInputs& inputs) {
  nlohmann::json j = {
      {"sampling_rate", inputs.sampling_rate},
      {"n_test", inputs.n_test},
      {"t_max", inputs.t_max},
      {"total_steps", inputs.total_steps()},
      {"epsilon", inputs.epsilon},
      {"delta", inputs.delta},
  };
  j["alpha"] = inputs.alpha ? nlohmann::json(*inputs.alpha) : nlohmann::json();
  return j;
}

nlohmann::json ToJson(const BudgetPlan& plan) {
  return {
      {"inputs", ToJson(plan.inputs)},
      {"alpha", plan.alpha},
      {"rdp_budget", plan.rdp_budget},
      {"per_step_budget", plan.per_step_budget},
      {"beta", plan.beta},
      {"per_step_rdp", plan.per_step_rdp},
      {"composed_rdp", plan.composed_rdp},
      {"realized_epsilon", plan.realized_epsilon},
      {"delta", plan.inputs.delta},
  };
}

}  // namespace mozo
