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

#ifndef MOZO_DIST_H_
#define MOZO_DIST_H_

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "mozo/rng.h"

namespace mozo {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Token identifier, an index into the provider's vocabulary.
struct TokenId {
  int32_t value = 0;

  friend auto operator<=>(const TokenId&, const TokenId&) = default;
};

// Sorted, duplicate-free set of vocabulary indices.
using IndexSet = std::vector<int32_t>;

// Dense scores over a vocabulary. Entries equal to -inf are masked. At least
// one entry is finite; +inf and NaN are rejected.
class LogitVector {
 public:
  static absl::StatusOr<LogitVector> Create(std::vector<double> scores);

  int vocab_size() const { return static_cast<int>(scores_.size()); }
  std::span<const double> scores() const { return scores_; }
  double operator[](int i) const { return scores_[i]; }
  bool masked(int i) const { return scores_[i] == kNegInf; }
  IndexSet Support() const;

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  explicit LogitVector(std::vector<double> scores)
      : scores_(std::move(scores)) {}

  std::vector<double> scores_;
};

// Normalized log-probabilities; masked entries are -inf.
class LogProbDist {
 public:
  // Accepts vectors whose logsumexp over finite entries is 0 within 1e-9.
  static absl::StatusOr<LogProbDist> FromLogProbs(std::vector<double> logp);

  int vocab_size() const { return static_cast<int>(logp_.size()); }
  std::span<const double> log_probs() const { return logp_; }
  double log_prob(int i) const { return logp_[i]; }
  double prob(int i) const;
  bool in_support(int i) const { return logp_[i] != kNegInf; }
  IndexSet Support() const;

 private:
  explicit LogProbDist(std::vector<double> logp) : logp_(std::move(logp)) {}

  friend absl::StatusOr<LogProbDist> NormalizeLogScores(
      std::vector<double> scores);

  std::vector<double> logp_;
};

// log(sum(exp(x))) over the finite entries; -inf if there are none.
double LogSumExp(std::span<const double> x);

// Shifts finite entries by their logsumexp. Errors on an empty support.
absl::StatusOr<LogProbDist> NormalizeLogScores(std::vector<double> scores);

absl::StatusOr<LogProbDist> LogSoftmax(const LogitVector& logits);

// The min(k, #finite) highest-scoring finite indices, returned sorted by
// index. Ties are broken in favour of the lower index.
absl::StatusOr<IndexSet> TopKIndices(const LogitVector& logits, int k);

// Masks every entry outside `keep`; entries inside `keep` are unchanged.
absl::StatusOr<LogitVector> TruncateToSupport(const LogitVector& logits,
                                              std::span<const int32_t> keep);

// Order-alpha Renyi divergence D_alpha(p || q), alpha > 1. Returns +inf when
// the support of p is not contained in the support of q. Negative round-off
// is clamped to 0.
absl::StatusOr<double> RenyiDivergence(const LogProbDist& p,
                                       const LogProbDist& q, double alpha);

// max(D_alpha(p || q), D_alpha(q || p)).
absl::StatusOr<double> SymmetricRenyiDivergence(const LogProbDist& p,
                                                const LogProbDist& q,
                                                double alpha);

// softmax(lambda * one_shot + (1 - lambda) * zero_shot) over the shared
// support. Masked coordinates are carried structurally and never enter the
// affine combination. The two vectors must have identical masks.
absl::StatusOr<LogProbDist> MixLogits(const LogitVector& one_shot,
                                      const LogitVector& zero_shot,
                                      double lambda);

// Normalized pointwise product over the intersection of supports.
absl::StatusOr<LogProbDist> ProductDistribution(
    std::span<const LogProbDist> dists);

// Inverse-CDF draw walking the support in index order. Consumes exactly one
// uniform from `rng`.
TokenId SampleToken(const LogProbDist& dist, Rng& rng);

}  // namespace mozo

#endif  // MOZO_DIST_H_
