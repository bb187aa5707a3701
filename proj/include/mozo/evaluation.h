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

#ifndef MOZO_EVALUATION_H_
#define MOZO_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/decoder.h"
#include "mozo/providers.h"
#include "mozo/rng.h"

namespace mozo {

// Lowercased whitespace tokens; no stemming or punctuation stripping.
std::vector<std::string> RougeTokenize(std::string_view text);

// LCS-based ROUGE-L F1. Zero when either side is empty or nothing matches.
double RougeLF1(std::span<const std::string> candidate,
                std::span<const std::string> reference);
double RougeLF1(std::string_view candidate, std::string_view reference);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation; 0 when n < 2
};
MeanStd Summarize(std::span<const double> values);

struct ScoredExample {
  std::string id;
  double score = 0.0;
  bool is_member = false;
};

// Mann-Whitney AUC with ties counted as 1/2. Needs both classes.
absl::StatusOr<double> AucRoc(std::span<const ScoredExample> scored);

// Token id of a single-token label; InvalidArgument when the label does not
// tokenize to exactly one token.
absl::StatusOr<TokenId> LabelToken(LogitProvider& provider,
                                   std::string_view label);

// Probability of the query's label under the one-shot distribution with
// `member` as the demonstration.
absl::StatusOr<double> MiaMembershipScore(LogitProvider& provider,
                                          const Demonstration& member,
                                          const Demonstration& query,
                                          std::string_view template_id);

// A mechanism under attack: the score the attacker observes for `query`
// when `member` is the only demonstration in the private set.
using MembershipScorer = std::function<absl::StatusOr<double>(
    const Demonstration& member, const Demonstration& query)>;

// Plain one-shot prompting.
MembershipScorer NonPrivateScorer(LogitProvider& provider,
                                  std::string template_id);

// Label probability under the private next-token distribution built from the
// zero-shot vector and the single one-shot vector; 0 outside the top-k.
MembershipScorer PrivateScorer(LogitProvider& provider, std::string template_id,
                               MechanismParams params);

struct MiaConfig {
  int test_pool_size = 51;
  int nonmembers_per_attack = 50;
  int repetitions = 5;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

struct MiaResult {
  // One AUC per repetition over all attacks' scores pooled together.
  std::vector<double> pooled_auc;
  MeanStd pooled;
  // Per repetition, the mean of the per-attack AUCs.
  std::vector<double> per_attack_auc;
  MeanStd per_attack;
};

// Each repetition draws a test pool and lets every example play the member
// once, scored against the other examples as non-members.
absl::StatusOr<MiaResult> MiaRun(std::span<const Demonstration> pool,
                                 const MiaConfig& config,
                                 const MembershipScorer& scorer);

// Mean over the records still generating at step t of their smallest lambda.
// The result is as long as the longest record.
std::vector<double> LambdaTraceAggregate(
    std::span<const GenerationRecord> records);

// "step\tmean_min_lambda\tn_records" rows, steps 1-based.
std::string LambdaTraceTsv(std::span<const GenerationRecord> records);

}  // namespace mozo

#endif  // MOZO_EVALUATION_H_
