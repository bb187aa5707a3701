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

#ifndef MOZO_PIPELINES_H_
#define MOZO_PIPELINES_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "mozo/accountant.h"
#include "mozo/decoder.h"
#include "mozo/providers.h"

namespace mozo {

// Per-task decoding defaults.
struct TaskPreset {
  std::string name;
  int t_max = 50;        // online private decoding
  int synth_t_max = 30;  // offline synthetic generation
  int top_k = 100;
  int n_shots = 4;
  std::string template_id;
};

// Presets for "samsum", "e2e" and "wikilarge"; NotFound otherwise.
absl::StatusOr<TaskPreset> FindPreset(std::string_view name);
std::vector<std::string> PresetNames();

struct Answer {
  std::string query_id;
  std::vector<TokenId> tokens;
  std::string text;  // detokenized, trailing EOS dropped
  int steps_used = 0;
  Termination terminated_by = Termination::kTMax;
  std::vector<double> per_step_min_lambda;  // empty for non-private answers
};

nlohmann::json ToJson(const Answer& answer);

// Serialized counter gating how many queries may be answered. Reserve() is
// an atomic reserve-then-execute, so concurrent callers cannot oversubscribe.
class QueryBudget {
 public:
  explicit QueryBudget(int64_t limit) : limit_(limit) {}

  // ResourceExhausted "privacy budget exhausted" once `limit` is reached.
  absl::Status Reserve();
  int64_t used() const { return used_.load(); }
  int64_t limit() const { return limit_; }

 private:
  const int64_t limit_;
  std::atomic<int64_t> used_{0};
};

struct AccountingReport {
  std::string id;  // digest of the plan, used as provenance
  BudgetPlan plan;
  int64_t queries_answered = 0;
  SpentBudget spent;  // over the token steps actually executed
};

nlohmann::json ToJson(const AccountingReport& report);

// Private answering against a fixed plan. The plan charges every query the
// full t_max steps up front; early EOS does not refund budget.
class OnlineSession {
 public:
  // Plans the budget (q = n_shots / |pool|) and fills beta and alpha into
  // the decoding config.
  static absl::StatusOr<std::unique_ptr<OnlineSession>> Create(
      DemoPool pool, AccountingInputs accounting, DecodingConfig decoding,
      LogitProvider& provider);

  // Answers one query with RNG stream DeriveSeed(seed, stream). Refused once
  // n_test queries have been answered.
  absl::StatusOr<Answer> AnswerQuery(const Query& query, uint64_t stream);

  // Fails with an internal error if the spent or planned epsilon exceeds the
  // target.
  absl::StatusOr<AccountingReport> Report() const;

  const BudgetPlan& plan() const { return plan_; }
  const DecodingConfig& decoding() const { return decoding_; }

 private:
  OnlineSession(DemoPool pool, BudgetPlan plan, DecodingConfig decoding,
                LogitProvider& provider)
      : pool_(std::move(pool)),
        plan_(std::move(plan)),
        decoding_(std::move(decoding)),
        provider_(provider),
        budget_(plan_.inputs.n_test) {}

  DemoPool pool_;
  BudgetPlan plan_;
  DecodingConfig decoding_;
  LogitProvider& provider_;
  QueryBudget budget_;
  std::atomic<int64_t> steps_executed_{0};
};

struct OnlineJob {
  std::vector<Demonstration> pool;
  std::vector<Query> queries;
  AccountingInputs accounting;
  DecodingConfig decoding;
  int parallelism = 1;
};

struct OnlineResult {
  std::vector<Answer> answers;  // in query order
  AccountingReport report;
};

// Refuses (ResourceExhausted) jobs with more queries than accounting.n_test.
absl::StatusOr<OnlineResult> RunOnline(const OnlineJob& job,
                                       LogitProvider& provider);

enum class OfflineDecodeMode { kEnsemble, kConcat };

struct SyntheticDemoSet {
  std::vector<Demonstration> demos;  // (public input, private output) pairs
  std::string provenance;            // accounting report id
};

// Non-private answering over the synthetic set. No query limit: the set is
// already differentially private.
class OfflineAnswerer {
 public:
  OfflineAnswerer(DemoPool synthetic, DecodingConfig decoding,
                  OfflineDecodeMode mode, LogitProvider& provider)
      : synthetic_(std::move(synthetic)),
        decoding_(std::move(decoding)),
        mode_(mode),
        provider_(provider) {}

  // Draws min(n_shots, |set|) synthetic demonstrations for the query, then
  // decodes with them.
  absl::StatusOr<Answer> AnswerQuery(const Query& query, uint64_t stream);

 private:
  DemoPool synthetic_;
  DecodingConfig decoding_;
  OfflineDecodeMode mode_;
  LogitProvider& provider_;
};

struct OfflineJob {
  std::vector<Demonstration> pool;
  std::vector<Query> public_inputs;
  int synth_t_max = 30;
  // n_shots/top_k/template/seed/lambda_max for the private phase, t_max for
  // the online phase.
  DecodingConfig decoding;
  // epsilon, delta, optional alpha. n_test and t_max are overwritten with
  // |public_inputs| and synth_t_max.
  AccountingInputs accounting;
  OfflineDecodeMode mode = OfflineDecodeMode::kEnsemble;
  int parallelism = 1;
};

struct OfflineResult {
  SyntheticDemoSet synthetic;
  AccountingReport report;
  std::unique_ptr<OfflineAnswerer> answerer;
};

absl::StatusOr<OfflineResult> RunOffline(const OfflineJob& job,
                                         LogitProvider& provider);

}  // namespace mozo

#endif  // MOZO_PIPELINES_H_
