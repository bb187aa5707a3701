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

#include "mozo/decoder.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "absl/strings/str_cat.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

absl::Status ValidateSampling(const DecodingConfig& config, int vocab_size) {
  if (config.top_k < 1 || config.top_k > vocab_size) {
    return absl::InvalidArgumentError(absl::StrCat(
        "top_k must lie in [1, ", vocab_size, "], got ", config.top_k));
  }
  if (config.t_max < 1) {
    return absl::InvalidArgumentError("T_max must be >= 1");
  }
  if (config.eos_token.value < 0 || config.eos_token.value >= vocab_size) {
    return absl::InvalidArgumentError("EOS token outside vocabulary");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<LogitVector>> TruncateAll(
    std::span<const LogitVector> vectors, const IndexSet& keep) {
  std::vector<LogitVector> out;
  out.reserve(vectors.size());
  for (const LogitVector& v : vectors) {
    ASSIGN_OR_RETURN(LogitVector t, TruncateToSupport(v, keep));
    out.push_back(std::move(t));
  }
  return out;
}

// Shared decode loop for the non-private decoders.
template <typename NextDist>
absl::StatusOr<DecodeResult> DecodeLoop(const DecodingConfig& config, Rng& rng,
                                        NextDist next_distribution) {
  DecodeResult result;
  for (int t = 0; t < config.t_max; ++t) {
    ASSIGN_OR_RETURN(const LogProbDist dist, next_distribution(result.tokens));
    const TokenId token = SampleToken(dist, rng);
    result.tokens.push_back(token);
    ++result.steps_used;
    if (token == config.eos_token) {
      result.terminated_by = Termination::kEos;
      return result;
    }
  }
  result.terminated_by = Termination::kTMax;
  return result;
}

}  // namespace

absl::Status DecodingConfig::Validate(int vocab_size) const {
  RETURN_IF_ERROR(ValidateSampling(*this, vocab_size));
  if (n_shots < 1) return absl::InvalidArgumentError("n_shots must be >= 1");
  if (!(beta > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must be > 0, got ", beta));
  }
  if (alpha < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be >= 2, got ", alpha));
  }
  RETURN_IF_ERROR((LambdaBounds{0.0, lambda_max}.Validate()));
  return bisection.Validate();
}

std::string_view TerminationName(Termination t) {
  return t == Termination::kEos ? "eos" : "t_max";
}

absl::StatusOr<DemoPool> DemoPool::Create(std::vector<Demonstration> demos) {
  if (demos.empty()) {
    return absl::InvalidArgumentError("demonstration pool is empty");
  }
  std::set<std::string> ids;
  for (const Demonstration& d : demos) {
    if (!ids.insert(d.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate demonstration id '", d.id, "'"));
    }
  }
  return DemoPool(std::move(demos));
}

absl::StatusOr<std::vector<Demonstration>> Subsample(const DemoPool& pool,
                                                     int n_shots, Rng& rng) {
  if (n_shots < 0 || static_cast<size_t>(n_shots) > pool.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot draw ", n_shots, " demonstrations from a pool of ",
                     pool.size()));
  }
  std::vector<size_t> index(pool.size());
  std::iota(index.begin(), index.end(), 0);
  std::vector<Demonstration> out;
  out.reserve(n_shots);
  for (int i = 0; i < n_shots; ++i) {
    const size_t j = i + rng.UniformInt(pool.size() - i);
    std::swap(index[i], index[j]);
    out.push_back(pool[index[i]]);
  }
  return out;
}

MechanismParams MechanismParamsFrom(const DecodingConfig& config) {
  MechanismParams p;
  p.top_k = config.top_k;
  p.beta = config.beta;
  p.alpha = config.alpha;
  p.bounds = LambdaBounds{0.0, config.lambda_max};
  p.bisection = config.bisection;
  return p;
}

double PrivateNextToken::min_lambda() const {
  return lambdas.empty() ? 0.0
                         : *std::min_element(lambdas.begin(), lambdas.end());
}

absl::StatusOr<PrivateNextToken> PrivateNextTokenDistribution(
    const LogitVector& zero_shot, std::span<const LogitVector> one_shots,
    const MechanismParams& params) {
  if (one_shots.empty()) {
    return absl::InvalidArgumentError("need at least one one-shot output");
  }
  ASSIGN_OR_RETURN(IndexSet support, TopKIndices(zero_shot, params.top_k));
  ASSIGN_OR_RETURN(const LogitVector public_logits,
                   TruncateToSupport(zero_shot, support));
  ASSIGN_OR_RETURN(const std::vector<LogitVector> private_logits,
                   TruncateAll(one_shots, support));
  ASSIGN_OR_RETURN(const LogProbDist reference, LogSoftmax(public_logits));
  const double radius = params.beta * params.alpha;
  std::vector<double> lambdas;
  std::vector<LogProbDist> mixed;
  lambdas.reserve(private_logits.size());
  mixed.reserve(private_logits.size());
  for (const LogitVector& one_shot : private_logits) {
    ASSIGN_OR_RETURN(
        const double lambda,
        SolveLambda(one_shot, public_logits, params.beta, params.alpha,
                    params.bounds, params.bisection));
    ASSIGN_OR_RETURN(LogProbDist dist,
                     MixLogits(one_shot, public_logits, lambda));
    // The solver already checked this; a violation here is a bug, and
    // releasing a token would break the privacy guarantee.
    ASSIGN_OR_RETURN(const double divergence,
                     SymmetricRenyiDivergence(dist, reference, params.alpha));
    if (!(divergence <= radius)) {
      return absl::InternalError(absl::StrCat(
          "mixed distribution exceeds the divergence radius: ", divergence,
          " > ", radius));
    }
    lambdas.push_back(lambda);
    mixed.push_back(std::move(dist));
  }
  ASSIGN_OR_RETURN(LogProbDist product, ProductDistribution(mixed));
  return PrivateNextToken{std::move(support), std::move(lambdas),
                          std::move(product)};
}

absl::StatusOr<LogProbDist> EnsembleNextTokenDistribution(
    const LogitVector& zero_shot, std::span<const LogitVector> one_shots,
    int top_k) {
  if (one_shots.empty()) {
    return absl::InvalidArgumentError("need at least one one-shot output");
  }
  ASSIGN_OR_RETURN(const IndexSet support, TopKIndices(zero_shot, top_k));
  std::vector<LogProbDist> dists;
  dists.reserve(one_shots.size());
  for (const LogitVector& one_shot : one_shots) {
    ASSIGN_OR_RETURN(const LogitVector truncated,
                     TruncateToSupport(one_shot, support));
    ASSIGN_OR_RETURN(LogProbDist dist, LogSoftmax(truncated));
    dists.push_back(std::move(dist));
  }
  return ProductDistribution(dists);
}

absl::StatusOr<StepResult> DpsMozoStep(const DemoPool& pool,
                                       std::string_view query,
                                       std::span<const TokenId> prefix,
                                       const DecodingConfig& config,
                                       LogitProvider& provider, Rng& rng) {
  ASSIGN_OR_RETURN(const std::vector<Demonstration> subset,
                   Subsample(pool, config.n_shots, rng));
  ASSIGN_OR_RETURN(const LogitVector zero_shot,
                   provider.Logits(ZeroShotContext(std::string(query), prefix,
                                                   config.template_id)));
  std::vector<LogitVector> one_shots;
  one_shots.reserve(subset.size());
  for (const Demonstration& demo : subset) {
    ASSIGN_OR_RETURN(LogitVector logits, provider.Logits(OneShotContext(
                                             demo, std::string(query), prefix,
                                             config.template_id)));
    one_shots.push_back(std::move(logits));
  }
  ASSIGN_OR_RETURN(PrivateNextToken next,
                   PrivateNextTokenDistribution(zero_shot, one_shots,
                                                MechanismParamsFrom(config)));
  StepResult step;
  step.token = SampleToken(next.distribution, rng);
  step.min_lambda = next.min_lambda();
  step.lambdas = std::move(next.lambdas);
  step.support = std::move(next.support);
  return step;
}

absl::StatusOr<GenerationRecord> DpsMozoGenerate(const DemoPool& pool,
                                                 std::string_view query,
                                                 const DecodingConfig& config,
                                                 LogitProvider& provider,
                                                 Rng& rng) {
  RETURN_IF_ERROR(config.Validate(provider.vocab_size()));
  if (static_cast<size_t>(config.n_shots) > pool.size()) {
    return absl::InvalidArgumentError("n_shots exceeds the demonstration pool");
  }
  GenerationRecord record;
  for (int t = 0; t < config.t_max; ++t) {
    ASSIGN_OR_RETURN(
        const StepResult step,
        DpsMozoStep(pool, query, record.tokens, config, provider, rng));
    record.tokens.push_back(step.token);
    record.per_step_min_lambda.push_back(step.min_lambda);
    ++record.steps_used;
    if (step.token == config.eos_token) {
      record.terminated_by = Termination::kEos;
      return record;
    }
  }
  record.terminated_by = Termination::kTMax;
  return record;
}

absl::StatusOr<DecodeResult> EnsembleDecode(
    std::span<const Demonstration> demos, std::string_view query,
    const DecodingConfig& config, LogitProvider& provider, Rng& rng) {
  RETURN_IF_ERROR(ValidateSampling(config, provider.vocab_size()));
  if (demos.empty()) {
    return absl::InvalidArgumentError("ensemble decoding needs demonstrations");
  }
  return DecodeLoop(
      config, rng,
      [&](const std::vector<TokenId>& prefix) -> absl::StatusOr<LogProbDist> {
        ASSIGN_OR_RETURN(const LogitVector zero_shot,
                         provider.Logits(ZeroShotContext(
                             std::string(query), prefix, config.template_id)));
        std::vector<LogitVector> one_shots;
        one_shots.reserve(demos.size());
        for (const Demonstration& demo : demos) {
          ASSIGN_OR_RETURN(
              LogitVector logits,
              provider.Logits(OneShotContext(demo, std::string(query), prefix,
                                             config.template_id)));
          one_shots.push_back(std::move(logits));
        }
        return EnsembleNextTokenDistribution(zero_shot, one_shots,
                                             config.top_k);
      });
}

absl::StatusOr<DecodeResult> ConcatDecode(std::span<const Demonstration> demos,
                                          std::string_view query,
                                          const DecodingConfig& config,
                                          LogitProvider& provider, Rng& rng) {
  RETURN_IF_ERROR(ValidateSampling(config, provider.vocab_size()));
  return DecodeLoop(
      config, rng,
      [&](const std::vector<TokenId>& prefix) -> absl::StatusOr<LogProbDist> {
        PromptContext ctx{{demos.begin(), demos.end()},
                          std::string(query),
                          prefix,
                          config.template_id};
        ASSIGN_OR_RETURN(const LogitVector logits, provider.Logits(ctx));
        ASSIGN_OR_RETURN(const IndexSet support,
                         TopKIndices(logits, config.top_k));
        ASSIGN_OR_RETURN(const LogitVector truncated,
                         TruncateToSupport(logits, support));
        return LogSoftmax(truncated);
      });
}

}  // namespace mozo
