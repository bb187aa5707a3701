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

#include "mozo/esa.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

double Norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

DecodingConfig SamplingConfig(const EsaConfig& config) {
  DecodingConfig d;
  d.top_k = config.top_k;
  d.t_max = config.t_max;
  d.eos_token = config.eos_token;
  d.template_id = config.template_id;
  return d;
}

absl::StatusOr<std::string> Generate(std::span<const Demonstration> demos,
                                     std::string_view query,
                                     const DecodingConfig& config,
                                     LogitProvider& provider, Rng& rng) {
  ASSIGN_OR_RETURN(DecodeResult result,
                   ConcatDecode(demos, query, config, provider, rng));
  if (!result.tokens.empty() && result.tokens.back() == config.eos_token) {
    result.tokens.pop_back();
  }
  return provider.Detokenize(result.tokens);
}

}  // namespace

absl::Status EsaConfig::Validate(size_t pool_size) const {
  if (num_subsets < 1 || subset_size < 1) {
    return absl::InvalidArgumentError(
        "num_subsets and subset_size must be >= 1");
  }
  if (static_cast<size_t>(num_subsets) * static_cast<size_t>(subset_size) >
      pool_size) {
    return absl::InvalidArgumentError(
        absl::StrCat("insufficient pool: need ", num_subsets * subset_size,
                     " demonstrations, have ", pool_size));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError("sigma must be finite and >= 0");
  }
  if (candidate_count < 1) {
    return absl::InvalidArgumentError("candidate_count must be >= 1");
  }
  if (top_k < 1 || t_max < 1) {
    return absl::InvalidArgumentError("top_k and t_max must be >= 1");
  }
  return absl::OkStatus();
}

nlohmann::json ToJson(const EsaConfig& config) {
  return {{"num_subsets", config.num_subsets},
          {"subset_size", config.subset_size},
          {"sigma", config.sigma},
          {"candidate_count", config.candidate_count},
          {"seed", config.seed},
          {"top_k", config.top_k},
          {"t_max", config.t_max},
          {"eos_token", config.eos_token.value},
          {"template_id", config.template_id},
          {"normalize_embeddings", config.normalize_embeddings}};
}

absl::StatusOr<std::vector<std::vector<size_t>>> PartitionPool(size_t pool_size,
                                                               int num_subsets,
                                                               int subset_size,
                                                               Rng& rng) {
  if (num_subsets < 1 || subset_size < 1) {
    return absl::InvalidArgumentError(
        "num_subsets and subset_size must be >= 1");
  }
  const size_t needed =
      static_cast<size_t>(num_subsets) * static_cast<size_t>(subset_size);
  if (needed > pool_size) {
    return absl::InvalidArgumentError(
        absl::StrCat("insufficient pool: need ", needed,
                     " demonstrations, have ", pool_size));
  }
  std::vector<size_t> order(pool_size);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = pool_size; i > 1; --i) {
    const size_t j = rng.UniformInt(i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<size_t>> subsets(num_subsets);
  for (int s = 0; s < num_subsets; ++s) {
    subsets[s].assign(order.begin() + s * subset_size,
                      order.begin() + (s + 1) * subset_size);
  }
  return subsets;
}

absl::StatusOr<int> SelectCandidate(
    std::span<const std::vector<double>> answer_embeddings,
    std::span<const std::vector<double>> candidate_embeddings, double sigma,
    bool normalize, Rng& rng) {
  if (answer_embeddings.empty() || candidate_embeddings.empty()) {
    return absl::InvalidArgumentError("need at least one answer and candidate");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError("sigma must be finite and >= 0");
  }
  const size_t dim = answer_embeddings.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const std::vector<double>& e : answer_embeddings) {
    if (e.size() != dim) {
      return absl::InvalidArgumentError("embedding dimension mismatch");
    }
    const double scale = normalize ? Norm(e) : 1.0;
    if (!(scale > 0.0)) return absl::InvalidArgumentError("zero embedding");
    for (size_t i = 0; i < dim; ++i) mean[i] += e[i] / scale;
  }
  for (double& x : mean) {
    x = x / static_cast<double>(answer_embeddings.size()) +
        sigma * rng.NextGaussian();
  }
  const double mean_norm = Norm(mean);
  int best = 0;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < candidate_embeddings.size(); ++c) {
    const std::vector<double>& e = candidate_embeddings[c];
    if (e.size() != dim) {
      return absl::InvalidArgumentError("embedding dimension mismatch");
    }
    const double denom = Norm(e) * mean_norm;
    const double cos = denom > 0.0 ? Dot(e, mean) / denom : 0.0;
    if (cos > best_cos) {
      best_cos = cos;
      best = static_cast<int>(c);
    }
  }
  return best;
}

absl::StatusOr<EsaResult> EsaAnswer(const DemoPool& pool,
                                    std::string_view query,
                                    const EsaConfig& config,
                                    LogitProvider& logits,
                                    EmbeddingProvider& embedder, Rng& rng) {
  RETURN_IF_ERROR(config.Validate(pool.size()));
  const DecodingConfig sampling = SamplingConfig(config);
  EsaResult result;

  result.candidates.reserve(config.candidate_count);
  for (int c = 0; c < config.candidate_count; ++c) {
    ASSIGN_OR_RETURN(std::string text,
                     Generate({}, query, sampling, logits, rng));
    result.candidates.push_back(std::move(text));
  }

  ASSIGN_OR_RETURN(
      const std::vector<std::vector<size_t>> subsets,
      PartitionPool(pool.size(), config.num_subsets, config.subset_size, rng));
  result.subset_answers.reserve(subsets.size());
  for (const std::vector<size_t>& subset : subsets) {
    std::vector<Demonstration> demos;
    demos.reserve(subset.size());
    for (size_t i : subset) demos.push_back(pool[i]);
    ASSIGN_OR_RETURN(std::string text,
                     Generate(demos, query, sampling, logits, rng));
    result.subset_answers.push_back(std::move(text));
  }

  ASSIGN_OR_RETURN(const std::vector<std::vector<double>> answer_vecs,
                   embedder.Embed(result.subset_answers));
  ASSIGN_OR_RETURN(const std::vector<std::vector<double>> candidate_vecs,
                   embedder.Embed(result.candidates));
  ASSIGN_OR_RETURN(result.candidate_index,
                   SelectCandidate(answer_vecs, candidate_vecs, config.sigma,
                                   config.normalize_embeddings, rng));
  result.text = result.candidates[result.candidate_index];
  return result;
}

}  // namespace mozo
