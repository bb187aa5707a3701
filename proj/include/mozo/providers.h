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

#ifndef MOZO_PROVIDERS_H_
#define MOZO_PROVIDERS_H_

#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/dist.h"

namespace mozo {

// A private input-output example.
struct Demonstration {
  std::string id;
  std::string input_text;
  std::string output_text;

  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

// An input query, optionally with a reference output for scoring.
struct Query {
  std::string id;
  std::string input_text;
  std::optional<std::string> reference;
};

// What a logit provider is conditioned on. No demonstrations is the
// zero-shot prompt, one is the one-shot prompt; several are concatenated in
// order (concat-based decoding only).
struct PromptContext {
  std::vector<Demonstration> demonstrations;
  std::string query_text;
  std::vector<TokenId> prefix;
  std::string template_id;

  bool zero_shot() const { return demonstrations.empty(); }
};

PromptContext ZeroShotContext(std::string query_text,
                              std::span<const TokenId> prefix,
                              std::string template_id);
PromptContext OneShotContext(const Demonstration& demo, std::string query_text,
                             std::span<const TokenId> prefix,
                             std::string template_id);

// Next-token logits. Implementations are safe for concurrent calls.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual int vocab_size() const = 0;
  virtual TokenId eos_token() const = 0;

  // Full-vocabulary logit vector with every entry finite.
  virtual absl::StatusOr<LogitVector> Logits(const PromptContext& ctx) = 0;

  // Token codec. The default is the opaque "tok<N>" codec used by the
  // synthetic and trace providers; a word that is not "tok<N>" with
  // N < vocab_size() is not in the vocabulary.
  virtual absl::StatusOr<std::vector<TokenId>> Tokenize(
      std::string_view text) const;
  virtual absl::StatusOr<std::string> Detokenize(
      std::span<const TokenId> tokens) const;
};

// Sentence embeddings with unit L2 norm.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual int dimension() const = 0;
  virtual absl::StatusOr<std::vector<std::vector<double>>> Embed(
      std::span<const std::string> texts) = 0;
};

// Checks the provider contract on a returned vector (size, finiteness).
absl::Status ValidateProviderLogits(const LogitVector& logits, int vocab_size);

// Decorator that logs, for every call, which demonstrations were in the
// prompt. Used to prove that a code path never touched the private pool.
class AuditingProvider : public LogitProvider {
 public:
  struct Call {
    std::vector<std::string> demo_ids;
    std::string query_text;
    size_t prefix_length = 0;
  };

  explicit AuditingProvider(LogitProvider& inner) : inner_(inner) {}

  int vocab_size() const override { return inner_.vocab_size(); }
  TokenId eos_token() const override { return inner_.eos_token(); }
  absl::StatusOr<LogitVector> Logits(const PromptContext& ctx) override;
  absl::StatusOr<std::vector<TokenId>> Tokenize(
      std::string_view text) const override {
    return inner_.Tokenize(text);
  }
  absl::StatusOr<std::string> Detokenize(
      std::span<const TokenId> tokens) const override {
    return inner_.Detokenize(tokens);
  }

  std::vector<Call> calls() const;
  size_t call_count() const;
  void Clear();

 private:
  LogitProvider& inner_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

// Line-delimited JSON records {"id", "input", "output"}. Ids must be unique
// and texts nonempty.
absl::StatusOr<std::vector<Demonstration>> LoadDemonstrations(
    const std::string& path);
absl::Status WriteDemonstrations(const std::string& path,
                                 std::span<const Demonstration> demos);

// Same schema; "output", when present, is kept as the reference.
absl::StatusOr<std::vector<Query>> LoadQueries(const std::string& path);

}  // namespace mozo

#endif  // MOZO_PROVIDERS_H_
