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

#ifndef MOZO_DECODER_H_
#define MOZO_DECODER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/dist.h"
#include "mozo/providers.h"
#include "mozo/rng.h"
#include "mozo/solvers.h"

namespace mozo {

struct DecodingConfig {
  int n_shots = 4;
  int top_k = 100;
  double lambda_max = 1.5;
  int t_max = 50;
  double beta = 0.0;  // target leakage; filled in by budget planning
  int alpha = 2;      // Renyi order of the per-demonstration constraint
  TokenId eos_token;
  uint64_t seed = 0;
  std::string template_id = "generic";
  BisectionSettings bisection;

  // Checks the private-decoding fields against a vocabulary.
  absl::Status Validate(int vocab_size) const;
};

enum class Termination { kEos, kTMax };
std::string_view TerminationName(Termination t);

// Output of a private generation, with the smallest mixing weight of each
// step for diagnostics.
struct GenerationRecord {
  std::vector<TokenId> tokens;
  std::vector<double> per_step_min_lambda;
  int steps_used = 0;
  Termination terminated_by = Termination::kTMax;
};

// Output of a non-private decoder.
struct DecodeResult {
  std::vector<TokenId> tokens;
  int steps_used = 0;
  Termination terminated_by = Termination::kTMax;
};

// The private demonstration set D.
class DemoPool {
 public:
  static absl::StatusOr<DemoPool> Create(std::vector<Demonstration> demos);

  size_t size() const { return demos_.size(); }
  std::span<const Demonstration> demonstrations() const { return demos_; }
  const Demonstration& operator[](size_t i) const { return demos_[i]; }

 private:
  explicit DemoPool(std::vector<Demonstration> demos)
      : demos_(std::move(demos)) {}

  std::vector<Demonstration> demos_;
};

// Uniform n_shots-subset without replacement (partial Fisher-Yates), in draw
// order.
absl::StatusOr<std::vector<Demonstration>> Subsample(const DemoPool& pool,
                                                     int n_shots, Rng& rng);

struct MechanismParams {
  int top_k = 100;
  double beta = 0.0;
  double alpha = 2.0;
  LambdaBounds bounds;
  BisectionSettings bisection;
};
MechanismParams MechanismParamsFrom(const DecodingConfig& config);

struct PrivateNextToken {
  IndexSet support;             // top-k of the zero-shot logits
  std::vector<double> lambdas;  // one per one-shot vector, in input order
  LogProbDist distribution;     // normalized product of the mixed dists

  double min_lambda() const;
};

// Everything the private step does between inference and sampling: top-k of
// the zero-shot logits, truncation of all vectors to it, one lambda per
// one-shot vector, mixing, and the normalized product.
absl::StatusOr<PrivateNextToken> PrivateNextTokenDistribution(
    const LogitVector& zero_shot, std::span<const LogitVector> one_shots,
    const MechanismParams& params);

// Non-private ensemble: product of the truncated one-shot distributions over
// the zero-shot top-k.
absl::StatusOr<LogProbDist> EnsembleNextTokenDistribution(
    const LogitVector& zero_shot, std::span<const LogitVector> one_shots,
    int top_k);

struct StepResult {
  TokenId token;
  std::vector<double> lambdas;
  double min_lambda = 0.0;
  IndexSet support;
};

// One private token: fresh subsample, one zero-shot and n_shots one-shot
// provider calls, then PrivateNextTokenDistribution and a draw.
absl::StatusOr<StepResult> DpsMozoStep(const DemoPool& pool,
                                       std::string_view query,
                                       std::span<const TokenId> prefix,
                                       const DecodingConfig& config,
                                       LogitProvider& provider, Rng& rng);

// Repeats DpsMozoStep until EOS is drawn (kept in the output) or t_max.
absl::StatusOr<GenerationRecord> DpsMozoGenerate(const DemoPool& pool,
                                                 std::string_view query,
                                                 const DecodingConfig& config,
                                                 LogitProvider& provider,
                                                 Rng& rng);

// Ensemble decoding over a fixed demonstration list.
absl::StatusOr<DecodeResult> EnsembleDecode(
    std::span<const Demonstration> demos, std::string_view query,
    const DecodingConfig& config, LogitProvider& provider, Rng& rng);

// Top-k sampling from the prompt with every demonstration concatenated. An
// empty list is plain zero-shot decoding.
absl::StatusOr<DecodeResult> ConcatDecode(std::span<const Demonstration> demos,
                                          std::string_view query,
                                          const DecodingConfig& config,
                                          LogitProvider& provider, Rng& rng);

}  // namespace mozo

#endif  // MOZO_DECODER_H_
