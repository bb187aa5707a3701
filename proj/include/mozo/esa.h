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

#ifndef MOZO_ESA_H_
#define MOZO_ESA_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "mozo/decoder.h"
#include "mozo/providers.h"
#include "mozo/rng.h"

namespace mozo {

// Embedding-space aggregation baseline. Sigma is taken as given; this
// library does not calibrate it from a privacy target.
struct EsaConfig {
  int num_subsets = 100;
  int subset_size = 4;
  double sigma = 0.0;
  int candidate_count = 100;
  uint64_t seed = 0;
  // Sampling for both the candidates and the per-subset answers.
  int top_k = 100;
  int t_max = 50;
  TokenId eos_token;
  std::string template_id = "generic";
  bool normalize_embeddings = true;

  absl::Status Validate(size_t pool_size) const;
};

nlohmann::json ToJson(const EsaConfig& config);

// Seeded shuffle of [0, pool_size), cut into `num_subsets` contiguous blocks
// of `subset_size`. Leftover indices are unused.
absl::StatusOr<std::vector<std::vector<size_t>>> PartitionPool(size_t pool_size,
                                                               int num_subsets,
                                                               int subset_size,
                                                               Rng& rng);

// Averages the answer embeddings (unit-normalizing each first when
// `normalize` is set), adds N(0, sigma^2) per coordinate and returns the
// index of the candidate with the highest cosine similarity to the result.
// Ties go to the lowest index.
absl::StatusOr<int> SelectCandidate(
    std::span<const std::vector<double>> answer_embeddings,
    std::span<const std::vector<double>> candidate_embeddings, double sigma,
    bool normalize, Rng& rng);

struct EsaResult {
  std::string text;
  int candidate_index = -1;
  std::vector<std::string> candidates;
  std::vector<std::string> subset_answers;
};

absl::StatusOr<EsaResult> EsaAnswer(const DemoPool& pool,
                                    std::string_view query,
                                    const EsaConfig& config,
                                    LogitProvider& logits,
                                    EmbeddingProvider& embedder, Rng& rng);

}  // namespace mozo

#endif  // MOZO_ESA_H_
