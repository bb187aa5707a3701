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

#include "mozo/pipelines.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "mozo/hashing.h"
#include "mozo/rng.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

std::vector<TokenId> WithoutTrailingEos(std::vector<TokenId> tokens,
                                        TokenId eos) {
  if (!tokens.empty() && tokens.back() == eos) tokens.pop_back();
  return tokens;
}

absl::StatusOr<std::string> AnswerText(LogitProvider& provider,
                                       const std::vector<TokenId>& tokens,
                                       TokenId eos) {
  return provider.Detokenize(WithoutTrailingEos(tokens, eos));
}

std::string PlanDigest(const BudgetPlan& plan) {
  return HexDigest(Fnv1a64(ToJson(plan).dump()));
}

// Runs fn(i) for i in [0, n) on up to `parallelism` threads and returns the
// first error by index.
absl::Status ParallelFor(size_t n, int parallelism,
                         const std::function<absl::Status(size_t)>& fn) {
  std::vector<absl::Status> statuses(n);
  const size_t workers =
      std::min<size_t>(std::max(1, parallelism), std::max<size_t>(n, 1));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) statuses[i] = fn(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) statuses[i] = fn(i);
      });
    }
    for (std::thread& t : threads) t.join();
  }
  for (absl::Status& s : statuses) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<TaskPreset> FindPreset(std::string_view name) {
  if (name == "samsum") return TaskPreset{"samsum", 50, 30, 100, 4, "samsum"};
  if (name == "e2e") return TaskPreset{"e2e", 25, 20, 100, 4, "e2e"};
  if (name == "wikilarge") {
    return TaskPreset{"wikilarge", 25, 20, 100, 4, "wikilarge"};
  }
  return absl::NotFoundError(
      absl::StrCat("unknown task preset: ", std::string(name)));
}

std::vector<std::string> PresetNames() {
  return {"samsum", "e2e", "wikilarge"};
}

nlohmann::json ToJson(const Answer& answer) {
  nlohmann::json tokens = nlohmann::json::array();
  for (TokenId t : answer.tokens) tokens.push_back(t.value);
  nlohmann::json j = {
      {"query_id", answer.query_id},
      {"text", answer.text},
      {"token_ids", tokens},
      {"steps_used", answer.steps_used},
      {"terminated_by", std::string(TerminationName(answer.terminated_by))}};
  if (!answer.per_step_min_lambda.empty()) {
    j["per_step_min_lambda"] = answer.per_step_min_lambda;
  }
  return j;
}

absl::Status QueryBudget::Reserve() {
  int64_t current = used_.load();
  while (current < limit_) {
    if (used_.compare_exchange_weak(current, current + 1)) {
      return absl::OkStatus();
    }
  }
  return absl::ResourceExhaustedError(absl::StrCat(
      "privacy budget exhausted: ", limit_, " queries already answered"));
}

nlohmann::json ToJson(const AccountingReport& report) {
  return {{"id", report.id},
          {"plan", ToJson(report.plan)},
          {"queries_answered", report.queries_answered},
          {"steps_executed", report.spent.steps_executed},
          {"spent_composed_rdp", report.spent.composed_rdp},
          {"spent_epsilon", report.spent.epsilon},
          {"target_epsilon", report.plan.inputs.epsilon},
          {"delta", report.plan.inputs.delta}};
}

absl::StatusOr<std::unique_ptr<OnlineSession>> OnlineSession::Create(
    DemoPool pool, AccountingInputs accounting, DecodingConfig decoding,
    LogitProvider& provider) {
  if (decoding.n_shots < 1 ||
      static_cast<size_t>(decoding.n_shots) > pool.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("n_shots must be in [1, |pool|=", pool.size(), "]"));
  }
  accounting.sampling_rate =
      static_cast<double>(decoding.n_shots) / static_cast<double>(pool.size());
  accounting.t_max = decoding.t_max;
  ASSIGN_OR_RETURN(BudgetPlan plan, PlanBudget(accounting, decoding.bisection));
  decoding.beta = plan.beta;
  decoding.alpha = plan.alpha;
  RETURN_IF_ERROR(decoding.Validate(provider.vocab_size()));
  return std::unique_ptr<OnlineSession>(new OnlineSession(
      std::move(pool), std::move(plan), std::move(decoding), provider));
}

absl::StatusOr<Answer> OnlineSession::AnswerQuery(const Query& query,
                                                  uint64_t stream) {
  RETURN_IF_ERROR(budget_.Reserve());
  Rng rng(DeriveSeed(decoding_.seed, stream));
  // The full t_max is charged whether or not EOS arrives early.
  steps_executed_ += decoding_.t_max;
  ASSIGN_OR_RETURN(
      GenerationRecord record,
      DpsMozoGenerate(pool_, query.input_text, decoding_, provider_, rng));
  ASSIGN_OR_RETURN(std::string text,
                   AnswerText(provider_, record.tokens, decoding_.eos_token));
  Answer answer;
  answer.query_id = query.id;
  answer.tokens = std::move(record.tokens);
  answer.text = std::move(text);
  answer.steps_used = record.steps_used;
  answer.terminated_by = record.terminated_by;
  answer.per_step_min_lambda = std::move(record.per_step_min_lambda);
  return answer;
}

absl::StatusOr<AccountingReport> OnlineSession::Report() const {
  AccountingReport report;
  report.id = PlanDigest(plan_);
  report.plan = plan_;
  report.queries_answered = budget_.used();
  ASSIGN_OR_RETURN(report.spent, SpentAfter(plan_, steps_executed_.load()));
  const double target = plan_.inputs.epsilon;
  if (report.spent.epsilon > target || plan_.realized_epsilon > target) {
    return absl::InternalError(
        absl::StrCat("realized epsilon ",
                     std::max(report.spent.epsilon, plan_.realized_epsilon),
                     " exceeds target ", target));
  }
  return report;
}

absl::StatusOr<OnlineResult> RunOnline(const OnlineJob& job,
                                       LogitProvider& provider) {
  if (static_cast<int64_t>(job.queries.size()) > job.accounting.n_test) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "privacy budget exhausted: ", job.queries.size(),
        " queries requested but the budget covers ", job.accounting.n_test));
  }
  ASSIGN_OR_RETURN(DemoPool pool, DemoPool::Create(job.pool));
  ASSIGN_OR_RETURN(std::unique_ptr<OnlineSession> session,
                   OnlineSession::Create(std::move(pool), job.accounting,
                                         job.decoding, provider));
  OnlineResult result;
  result.answers.resize(job.queries.size());
  RETURN_IF_ERROR(ParallelFor(
      job.queries.size(), job.parallelism, [&](size_t i) -> absl::Status {
        ASSIGN_OR_RETURN(result.answers[i],
                         session->AnswerQuery(job.queries[i], i));
        return absl::OkStatus();
      }));
  ASSIGN_OR_RETURN(result.report, session->Report());
  return result;
}

absl::StatusOr<Answer> OfflineAnswerer::AnswerQuery(const Query& query,
                                                    uint64_t stream) {
  Rng rng(DeriveSeed(decoding_.seed, stream));
  const int shots = std::min<int>(decoding_.n_shots, synthetic_.size());
  ASSIGN_OR_RETURN(const std::vector<Demonstration> demos,
                   Subsample(synthetic_, shots, rng));
  DecodeResult decoded;
  if (mode_ == OfflineDecodeMode::kConcat) {
    ASSIGN_OR_RETURN(decoded, ConcatDecode(demos, query.input_text, decoding_,
                                           provider_, rng));
  } else {
    ASSIGN_OR_RETURN(decoded, EnsembleDecode(demos, query.input_text, decoding_,
                                             provider_, rng));
  }
  ASSIGN_OR_RETURN(std::string text,
                   AnswerText(provider_, decoded.tokens, decoding_.eos_token));
  Answer answer;
  answer.query_id = query.id;
  answer.tokens = std::move(decoded.tokens);
  answer.text = std::move(text);
  answer.steps_used = decoded.steps_used;
  answer.terminated_by = decoded.terminated_by;
  return answer;
}

absl::StatusOr<OfflineResult> RunOffline(const OfflineJob& job,
                                         LogitProvider& provider) {
  if (job.public_inputs.empty()) {
    return absl::InvalidArgumentError("no public inputs to label");
  }
  std::set<std::string> private_ids;
  for (const Demonstration& d : job.pool) private_ids.insert(d.id);
  for (const Query& q : job.public_inputs) {
    if (private_ids.contains(q.id)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "public input id ", q.id, " collides with a private demonstration"));
    }
  }
  AccountingInputs accounting = job.accounting;
  accounting.n_test = static_cast<int64_t>(job.public_inputs.size());
  DecodingConfig synth = job.decoding;
  synth.t_max = job.synth_t_max;

  ASSIGN_OR_RETURN(DemoPool pool, DemoPool::Create(job.pool));
  ASSIGN_OR_RETURN(
      std::unique_ptr<OnlineSession> session,
      OnlineSession::Create(std::move(pool), accounting, synth, provider));

  std::vector<Demonstration> demos(job.public_inputs.size());
  RETURN_IF_ERROR(ParallelFor(
      job.public_inputs.size(), job.parallelism, [&](size_t i) -> absl::Status {
        const Query& input = job.public_inputs[i];
        ASSIGN_OR_RETURN(Answer answer, session->AnswerQuery(input, i));
        std::string output = std::move(answer.text);
        // An immediate EOS still has to yield a nonempty output text.
        if (output.empty()) {
          ASSIGN_OR_RETURN(output, provider.Detokenize(answer.tokens));
        }
        demos[i] = Demonstration{input.id, input.input_text, output};
        return absl::OkStatus();
      }));

  OfflineResult result;
  ASSIGN_OR_RETURN(result.report, session->Report());
  result.synthetic.demos = demos;
  result.synthetic.provenance = result.report.id;
  ASSIGN_OR_RETURN(DemoPool synthetic_pool, DemoPool::Create(std::move(demos)));
  result.answerer = std::make_unique<OfflineAnswerer>(
      std::move(synthetic_pool), job.decoding, job.mode, provider);
  return result;
}

}  // namespace mozo
