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

#include "mozo/dist.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

constexpr double kNormalizationTolerance = 1e-9;

IndexSet FiniteIndices(std::span<const double> v) {
  IndexSet out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] != kNegInf) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

absl::Status CheckSameVocab(int a, int b) {
  if (a != b) {
    return absl::InvalidArgumentError(
        absl::StrCat("vocabulary size mismatch: ", a, " vs ", b));
  }
  return absl::OkStatus();
}

absl::Status CheckAlpha(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Renyi order must be a finite value > 1, got ", alpha));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LogitVector> LogitVector::Create(std::vector<double> scores) {
  bool any_finite = false;
  for (double s : scores) {
    if (std::isnan(s) || s == kInf) {
      return absl::InvalidArgumentError("logits must not contain NaN or +inf");
    }
    any_finite |= std::isfinite(s);
  }
  if (!any_finite) return absl::InvalidArgumentError("empty support");
  return LogitVector(std::move(scores));
}

IndexSet LogitVector::Support() const { return FiniteIndices(scores_); }

absl::StatusOr<LogProbDist> LogProbDist::FromLogProbs(
    std::vector<double> logp) {
  for (double v : logp) {
    if (std::isnan(v) || v > 0.0) {
      return absl::InvalidArgumentError(
          "log-probabilities must be <= 0 and not NaN");
    }
  }
  const double total = LogSumExp(logp);
  if (total == kNegInf) return absl::InvalidArgumentError("empty support");
  if (std::abs(total) > kNormalizationTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("distribution not normalized: logsumexp = ", total));
  }
  return LogProbDist(std::move(logp));
}

double LogProbDist::prob(int i) const { return std::exp(logp_[i]); }

IndexSet LogProbDist::Support() const { return FiniteIndices(logp_); }

double LogSumExp(std::span<const double> x) {
  double max = kNegInf;
  for (double v : x) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : x) {
    if (v != kNegInf) sum += std::exp(v - max);
  }
  return max + std::log(sum);
}

absl::StatusOr<LogProbDist> NormalizeLogScores(std::vector<double> scores) {
  if (scores.empty()) return absl::InvalidArgumentError("empty support");
  const double max = *std::max_element(scores.begin(), scores.end());
  if (max == kNegInf) return absl::InvalidArgumentError("empty support");
  for (double& s : scores) {
    if (s != kNegInf) s -= max;
  }
  const double total = LogSumExp(scores);
  for (double& s : scores) {
    if (s != kNegInf) s -= total;
  }
  return LogProbDist(std::move(scores));
}

absl::StatusOr<LogProbDist> LogSoftmax(const LogitVector& logits) {
  return NormalizeLogScores(
      std::vector<double>(logits.scores().begin(), logits.scores().end()));
}

absl::StatusOr<IndexSet> TopKIndices(const LogitVector& logits, int k) {
  if (k <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("k must be positive, got ", k));
  }
  IndexSet order = logits.Support();
  const size_t keep = std::min<size_t>(k, order.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int32_t a, int32_t b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

absl::StatusOr<LogitVector> TruncateToSupport(const LogitVector& logits,
                                              std::span<const int32_t> keep) {
  if (keep.empty())
    return absl::InvalidArgumentError("truncation set is empty");
  std::vector<double> out(logits.vocab_size(), kNegInf);
  for (int32_t i : keep) {
    if (i < 0 || i >= logits.vocab_size()) {
      return absl::OutOfRangeError(absl::StrCat(
          "index ", i, " outside vocabulary of size ", logits.vocab_size()));
    }
    out[i] = logits[i];
  }
  return LogitVector::Create(std::move(out));
}

absl::StatusOr<double> RenyiDivergence(const LogProbDist& p,
                                       const LogProbDist& q, double alpha) {
  RETURN_IF_ERROR(CheckAlpha(alpha));
  RETURN_IF_ERROR(CheckSameVocab(p.vocab_size(), q.vocab_size()));
  std::vector<double> terms;
  terms.reserve(p.vocab_size());
  bool identical = true;
  for (int i = 0; i < p.vocab_size(); ++i) {
    identical = identical && p.log_prob(i) == q.log_prob(i);
    if (!p.in_support(i)) continue;
    if (!q.in_support(i)) return kInf;
    terms.push_back(p.log_prob(i) +
                    (alpha - 1.0) * (p.log_prob(i) - q.log_prob(i)));
  }
  // Rounding in the log-sum-exp would otherwise report ~1e-16 for equal
  // inputs, which makes lambda = 0 infeasible under tiny radii.
  if (identical) return 0.0;
  return std::max(0.0, LogSumExp(terms) / (alpha - 1.0));
}

absl::StatusOr<double> SymmetricRenyiDivergence(const LogProbDist& p,
                                                const LogProbDist& q,
                                                double alpha) {
  ASSIGN_OR_RETURN(const double forward, RenyiDivergence(p, q, alpha));
  ASSIGN_OR_RETURN(const double backward, RenyiDivergence(q, p, alpha));
  return std::max(forward, backward);
}

absl::StatusOr<LogProbDist> MixLogits(const LogitVector& one_shot,
                                      const LogitVector& zero_shot,
                                      double lambda) {
  RETURN_IF_ERROR(
      CheckSameVocab(one_shot.vocab_size(), zero_shot.vocab_size()));
  if (!std::isfinite(lambda) || lambda < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("mixing weight must be finite and >= 0, got ", lambda));
  }
  std::vector<double> mixed(one_shot.vocab_size(), kNegInf);
  for (int i = 0; i < one_shot.vocab_size(); ++i) {
    if (one_shot.masked(i) != zero_shot.masked(i)) {
      return absl::InvalidArgumentError("support mismatch");
    }
    if (one_shot.masked(i)) continue;
    mixed[i] = lambda * one_shot[i] + (1.0 - lambda) * zero_shot[i];
  }
  return NormalizeLogScores(std::move(mixed));
}

absl::StatusOr<LogProbDist> ProductDistribution(
    std::span<const LogProbDist> dists) {
  if (dists.empty()) {
    return absl::InvalidArgumentError("product of zero distributions");
  }
  const int vocab = dists.front().vocab_size();
  std::vector<double> sum(vocab, 0.0);
  for (const LogProbDist& d : dists) {
    RETURN_IF_ERROR(CheckSameVocab(vocab, d.vocab_size()));
    for (int i = 0; i < vocab; ++i) {
      if (sum[i] == kNegInf) continue;
      sum[i] = d.in_support(i) ? sum[i] + d.log_prob(i) : kNegInf;
    }
  }
  auto normalized = NormalizeLogScores(std::move(sum));
  if (!normalized.ok()) {
    return absl::InvalidArgumentError("empty support intersection");
  }
  return normalized;
}

TokenId SampleToken(const LogProbDist& dist, Rng& rng) {
  const double u = rng.NextUniform();
  double cumulative = 0.0;
  int32_t last = -1;
  for (int i = 0; i < dist.vocab_size(); ++i) {
    if (!dist.in_support(i)) continue;
    last = i;
    cumulative += dist.prob(i);
    if (u < cumulative) return TokenId{i};
  }
  // Round-off left the cumulative sum just below 1.
  return TokenId{last};
}

}  // namespace mozo
