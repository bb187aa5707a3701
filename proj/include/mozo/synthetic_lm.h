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

#ifndef MOZO_SYNTHETIC_LM_H_
#define MOZO_SYNTHETIC_LM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/providers.h"

namespace mozo {

struct SyntheticLmOptions {
  int vocab_size = 32;
  uint64_t seed = 0;
  // gamma: scale of each demonstration's additive effect on the logits.
  double demo_influence = 1.0;
  // Standard deviation of the demonstration-free base logits.
  double base_scale = 2.0;
  int eos_token = 0;
  // Added to the EOS logit per generated prefix token.
  double eos_slope = 0.5;
  // Added to the label token of a demonstration whose input equals the
  // query. Zero disables it; used to build membership-leaking models.
  double member_bonus = 0.0;

  absl::Status Validate() const;
};

// Deterministic toy language model with controllable demonstration influence:
//
//   logits = base(seed, template, query, prefix)
//          + gamma * sum_d effect(seed, d, query, prefix)
//          + eos_slope * |prefix| * e_eos
//          [+ member_bonus * e_label(d) when d.input == query]
//
// base and effect are pseudo-random standard normal tables addressed by
// hashes of their arguments. Several demonstrations (concat prompts) sum
// their effects.
class SyntheticLm : public LogitProvider {
 public:
  static absl::StatusOr<std::unique_ptr<SyntheticLm>> Create(
      SyntheticLmOptions options);

  int vocab_size() const override { return options_.vocab_size; }
  TokenId eos_token() const override { return TokenId{options_.eos_token}; }
  absl::StatusOr<LogitVector> Logits(const PromptContext& ctx) override;

  const SyntheticLmOptions& options() const { return options_; }

 private:
  explicit SyntheticLm(SyntheticLmOptions options)
      : options_(std::move(options)) {}

  SyntheticLmOptions options_;
};

// Seeded hash-to-unit-vector embeddings.
class SyntheticEmbedder : public EmbeddingProvider {
 public:
  explicit SyntheticEmbedder(int dimension = 64, uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {}

  int dimension() const override { return dimension_; }
  absl::StatusOr<std::vector<std::vector<double>>> Embed(
      std::span<const std::string> texts) override;

 private:
  int dimension_;
  uint64_t seed_;
};

}  // namespace mozo

#endif  // MOZO_SYNTHETIC_LM_H_
