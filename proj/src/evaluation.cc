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

#include "mozo/evaluation.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "mozo/status_macros.h"

namespace mozo {

std::vector<std::string> RougeTokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (absl::string_view word :
       absl::StrSplit(absl::string_view(text.data(), text.size()),
                      absl::ByAnyChar(" \t\n\r\f\v"), absl::SkipEmpty())) {
    std::string lower(word);
    for (char& c : lower) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    tokens.push_back(std::move(lower));
  }
  return tokens;
}

double RougeLF1(std::span<const std::string> candidate,
                std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  std::vector<size_t> prev(reference.size() + 1, 0);
  std::vector<size_t> cur(reference.size() + 1, 0);
  for (size_t i = 1; i <= candidate.size(); ++i) {
    for (size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1]
                   ? prev[j - 1] + 1
                   : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[reference.size()]);
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(candidate.size());
  const double recall = lcs / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

double RougeLF1(std::string_view candidate, std::string_view reference) {
  const std::vector<std::string> c = RougeTokenize(candidate);
  const std::vector<std::string> r = RougeTokenize(reference);
  return RougeLF1(c, r);
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(ss / (n - 1.0));
  return out;
}

absl::StatusOr<double> AucRoc(std::span<const ScoredExample> scored) {
  std::vector<double> members;
  std::vector<double> others;
  for (const ScoredExample& s : scored) {
    if (!std::isfinite(s.score)) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-finite score for ", s.id));
    }
    (s.is_member ? members : others).push_back(s.score);
  }
  if (members.empty() || others.empty()) {
    return absl::InvalidArgumentError(
        "AUC needs at least one member and one non-member");
  }
  // Count pairs by sorting the non-members once and binary-searching.
  std::sort(others.begin(), others.end());
  double wins = 0.0;
  for (double m : members) {
    const auto lo = std::lower_bound(others.begin(), others.end(), m);
    const auto hi = std::upper_bound(lo, others.end(), m);
    wins += static_cast<double>(lo - others.begin()) +
            0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(members.size()) *
                 static_cast<double>(others.size()));
}

absl::StatusOr<TokenId> LabelToken(LogitProvider& provider,
                                   std::string_view label) {
  ASSIGN_OR_RETURN(const std::vector<TokenId> tokens, provider.Tokenize(label));
  if (tokens.size() != 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label '", std::string(label), "' is not a single vocabulary token"));
  }
  return tokens.front();
}

absl::StatusOr<double> MiaMembershipScore(LogitProvider& provider,
                                          const Demonstration& member,
                                          const Demonstration& query,
                                          std::string_view template_id) {
  ASSIGN_OR_RETURN(const TokenId label,
                   LabelToken(provider, query.output_text));
  ASSIGN_OR_RETURN(const LogitVector logits,
                   provider.Logits(OneShotContext(member, query.input_text, {},
                                                  std::string(template_id))));
  ASSIGN_OR_RETURN(const LogProbDist dist, LogSoftmax(logits));
  return dist.prob(label.value);
}

MembershipScorer NonPrivateScorer(LogitProvider& provider,
                                  std::string template_id) {
  return [&provider, template_id](const Demonstration& member,
                                  const Demonstration& query) {
    return MiaMembershipScore(provider, member, query, template_id);
  };
}

MembershipScorer PrivateScorer(LogitProvider& provider, std::string template_id,
                               MechanismParams params) {
  return [&provider, template_id, params](
             const Demonstration& member,
             const Demonstration& query) -> absl::StatusOr<double> {
    ASSIGN_OR_RETURN(const TokenId label,
                     LabelToken(provider, query.output_text));
    ASSIGN_OR_RETURN(
        const LogitVector zero,
        provider.Logits(ZeroShotContext(query.input_text, {}, template_id)));
    ASSIGN_OR_RETURN(LogitVector one,
                     provider.Logits(OneShotContext(member, query.input_text,
                                                    {}, template_id)));
    const std::vector<LogitVector> ones = {std::move(one)};
    ASSIGN_OR_RETURN(const PrivateNextToken next,
                     PrivateNextTokenDistribution(zero, ones, params));
    return next.distribution.prob(label.value);
  };
}

absl::Status MiaConfig::Validate() const {
  if (test_pool_size < 2) {
    return absl::InvalidArgumentError("test_pool_size must be >= 2");
  }
  if (nonmembers_per_attack != test_pool_size - 1) {
    return absl::InvalidArgumentError(
        "nonmembers_per_attack must equal test_pool_size - 1");
  }
  if (repetitions < 1) {
    return absl::InvalidArgumentError("repetitions must be >= 1");
  }
  return absl::OkStatus();
}

absl::StatusOr<MiaResult> MiaRun(std::span<const Demonstration> pool,
                                 const MiaConfig& config,
                                 const MembershipScorer& scorer) {
  RETURN_IF_ERROR(config.Validate());
  const size_t n = static_cast<size_t>(config.test_pool_size);
  if (pool.size() < n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "pool of ", pool.size(), " is smaller than test_pool_size ", n));
  }
  MiaResult result;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    Rng rng(DeriveSeed(config.seed, static_cast<uint64_t>(rep)));
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = 0; i < n; ++i) {
      const size_t j = i + rng.UniformInt(pool.size() - i);
      std::swap(order[i], order[j]);
    }
    std::vector<ScoredExample> pooled;
    std::vector<double> attack_aucs;
    for (size_t a = 0; a < n; ++a) {
      const Demonstration& member = pool[order[a]];
      std::vector<ScoredExample> attack;
      attack.reserve(n);
      for (size_t b = 0; b < n; ++b) {
        const Demonstration& query = pool[order[b]];
        ASSIGN_OR_RETURN(const double score, scorer(member, query));
        attack.push_back(ScoredExample{query.id, score, a == b});
      }
      ASSIGN_OR_RETURN(const double auc, AucRoc(attack));
      attack_aucs.push_back(auc);
      pooled.insert(pooled.end(), attack.begin(), attack.end());
    }
    ASSIGN_OR_RETURN(const double auc, AucRoc(pooled));
    result.pooled_auc.push_back(auc);
    result.per_attack_auc.push_back(Summarize(attack_aucs).mean);
  }
  result.pooled = Summarize(result.pooled_auc);
  result.per_attack = Summarize(result.per_attack_auc);
  return result;
}

namespace {

std::pair<std::vector<double>, std::vector<int>> TraceSums(
    std::span<const GenerationRecord> records) {
  std::vector<double> sums;
  std::vector<int> counts;
  for (const GenerationRecord& r : records) {
    const std::vector<double>& l = r.per_step_min_lambda;
    if (l.size() > sums.size()) {
      sums.resize(l.size(), 0.0);
      counts.resize(l.size(), 0);
    }
    for (size_t t = 0; t < l.size(); ++t) {
      sums[t] += l[t];
      ++counts[t];
    }
  }
  return {sums, counts};
}

}  // namespace

std::vector<double> LambdaTraceAggregate(
    std::span<const GenerationRecord> records) {
  auto [sums, counts] = TraceSums(records);
  for (size_t t = 0; t < sums.size(); ++t) sums[t] /= counts[t];
  return sums;
}

std::string LambdaTraceTsv(std::span<const GenerationRecord> records) {
  const auto [sums, counts] = TraceSums(records);
  std::string out = "step\tmean_min_lambda\tn_records\n";
  for (size_t t = 0; t < sums.size(); ++t) {
    absl::StrAppendFormat(&out, "%d\t%.17g\t%d\n", t + 1, sums[t] / counts[t],
                          counts[t]);
  }
  return out;
}

}  // namespace mozo
