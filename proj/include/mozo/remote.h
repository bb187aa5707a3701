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

#ifndef MOZO_REMOTE_H_
#define MOZO_REMOTE_H_

#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "mozo/providers.h"

namespace mozo {

// Client side of the inference server protocol (HTTP/1.1, JSON bodies):
//
//   GET  /v1/model       -> {"model", "vocab_size", "eos_token_id",
//                            "embedding_dim", "prefix_splicing"}
//   POST /v1/logits      {"model", "template_id", "demonstration":
//                         {"input", "output"} | null, "query",
//                         "prefix_token_ids"}
//                        -> {"vocab_size", "logits", "eos_token_id"}
//   POST /v1/embed       {"texts"} -> {"dimension", "embeddings"}
//   POST /v1/tokenize    {"text"} -> {"token_ids"}
//   POST /v1/detokenize  {"token_ids"} -> {"text"}
//
// Concat prompts with more than one demonstration send a "demonstrations"
// array instead of "demonstration".
struct RemoteOptions {
  std::string endpoint = "http://127.0.0.1:8000";
  std::string model;
  int max_attempts = 3;
  int timeout_ms = 30000;
  int max_in_flight = 4;
  int retry_backoff_ms = 50;
};

struct ModelInfo {
  std::string model;
  int vocab_size = 0;
  TokenId eos_token;
  int embedding_dim = 0;
};

// Request/response bodies, exposed for contract tests.
nlohmann::json LogitsRequestJson(const std::string& model,
                                 const PromptContext& ctx);
absl::StatusOr<LogitVector> ParseLogitsResponse(const nlohmann::json& body,
                                                int expected_vocab_size);
absl::StatusOr<ModelInfo> ParseModelInfo(const nlohmann::json& body);

// Shared HTTP transport with retries and an in-flight limit. Transport
// failures and 503 responses are retried; other non-2xx statuses are not.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteOptions options);

  absl::StatusOr<nlohmann::json> Get(const std::string& path);
  absl::StatusOr<nlohmann::json> Post(const std::string& path,
                                      const nlohmann::json& body);

  const RemoteOptions& options() const { return options_; }

 private:
  absl::StatusOr<nlohmann::json> Send(const std::string& method,
                                      const std::string& path,
                                      const nlohmann::json* body);

  RemoteOptions options_;
  std::counting_semaphore<1024> in_flight_;
};

class RemoteLogitProvider : public LogitProvider {
 public:
  // Fetches /v1/model to learn the vocabulary.
  static absl::StatusOr<std::unique_ptr<RemoteLogitProvider>> Connect(
      RemoteOptions options);

  int vocab_size() const override { return info_.vocab_size; }
  TokenId eos_token() const override { return info_.eos_token; }
  absl::StatusOr<LogitVector> Logits(const PromptContext& ctx) override;
  absl::StatusOr<std::vector<TokenId>> Tokenize(
      std::string_view text) const override;
  absl::StatusOr<std::string> Detokenize(
      std::span<const TokenId> tokens) const override;

  const ModelInfo& info() const { return info_; }

 private:
  RemoteLogitProvider(std::unique_ptr<RemoteClient> client, ModelInfo info)
      : client_(std::move(client)), info_(std::move(info)) {}

  std::unique_ptr<RemoteClient> client_;
  ModelInfo info_;
};

class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  static absl::StatusOr<std::unique_ptr<RemoteEmbeddingProvider>> Connect(
      RemoteOptions options);

  int dimension() const override { return dimension_; }
  absl::StatusOr<std::vector<std::vector<double>>> Embed(
      std::span<const std::string> texts) override;

 private:
  RemoteEmbeddingProvider(std::unique_ptr<RemoteClient> client, int dimension)
      : client_(std::move(client)), dimension_(dimension) {}

  std::unique_ptr<RemoteClient> client_;
  int dimension_;
};

}  // namespace mozo

#endif  // MOZO_REMOTE_H_
