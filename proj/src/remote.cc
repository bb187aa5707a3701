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

#include "mozo/remote.h"

#include <chrono>
#include <cmath>
#include <thread>

#include "absl/strings/str_cat.h"
#include "httplib.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

using nlohmann::json;

json DemoJson(const Demonstration& d) {
  return {{"input", d.input_text}, {"output", d.output_text}};
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) {
    s_.acquire();
  }
  ~SemaphoreGuard() { s_.release(); }

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

json LogitsRequestJson(const std::string& model, const PromptContext& ctx) {
  json prefix = json::array();
  for (TokenId t : ctx.prefix) prefix.push_back(t.value);
  json body = {{"model", model},
               {"template_id", ctx.template_id},
               {"query", ctx.query_text},
               {"prefix_token_ids", prefix}};
  if (ctx.demonstrations.size() <= 1) {
    body["demonstration"] = ctx.demonstrations.empty()
                                ? json()
                                : DemoJson(ctx.demonstrations.front());
  } else {
    json demos = json::array();
    for (const Demonstration& d : ctx.demonstrations)
      demos.push_back(DemoJson(d));
    body["demonstrations"] = std::move(demos);
  }
  return body;
}

absl::StatusOr<LogitVector> ParseLogitsResponse(const json& body,
                                                int expected_vocab_size) {
  if (!body.is_object() || !body.contains("logits") ||
      !body["logits"].is_array() || !body.contains("vocab_size")) {
    return absl::DataLossError("malformed logits response");
  }
  const int vocab = body["vocab_size"].get<int>();
  if (vocab != expected_vocab_size) {
    return absl::DataLossError(absl::StrCat("server vocab_size ", vocab,
                                            " differs from model's ",
                                            expected_vocab_size));
  }
  std::vector<double> scores;
  scores.reserve(vocab);
  for (const json& v : body["logits"]) {
    if (!v.is_number()) {
      return absl::DataLossError("non-numeric logit in response");
    }
    scores.push_back(v.get<double>());
  }
  ASSIGN_OR_RETURN(LogitVector logits, LogitVector::Create(std::move(scores)));
  RETURN_IF_ERROR(ValidateProviderLogits(logits, expected_vocab_size));
  return logits;
}

absl::StatusOr<ModelInfo> ParseModelInfo(const json& body) {
  try {
    ModelInfo info;
    info.model = body.value("model", "");
    info.vocab_size = body.at("vocab_size").get<int>();
    info.eos_token = TokenId{body.at("eos_token_id").get<int32_t>()};
    info.embedding_dim = body.value("embedding_dim", 0);
    if (info.vocab_size < 2 || info.eos_token.value < 0 ||
        info.eos_token.value >= info.vocab_size) {
      return absl::DataLossError("inconsistent model metadata");
    }
    return info;
  } catch (const json::exception& e) {
    return absl::DataLossError(
        absl::StrCat("malformed model info: ", e.what()));
  }
}

RemoteClient::RemoteClient(RemoteOptions options)
    : options_(std::move(options)),
      in_flight_(std::max(1, std::min(options_.max_in_flight, 1024))) {}

absl::StatusOr<json> RemoteClient::Get(const std::string& path) {
  return Send("GET", path, nullptr);
}

absl::StatusOr<json> RemoteClient::Post(const std::string& path,
                                        const json& body) {
  return Send("POST", path, &body);
}

absl::StatusOr<json> RemoteClient::Send(const std::string& method,
                                        const std::string& path,
                                        const json* body) {
  SemaphoreGuard guard(in_flight_);
  const int attempts = std::max(1, options_.max_attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(options_.endpoint);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Result result =
        method == "GET" ? client.Get(path)
                        : client.Post(path, body->dump(), "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
    } else if (result->status == 503) {
      last_error = "503 model not ready";
    } else if (result->status < 200 || result->status >= 300) {
      const std::string message = absl::StrCat(
          method, " ", path, " returned ", result->status, ": ", result->body);
      if (result->status == 400 || result->status == 422) {
        return absl::InvalidArgumentError(message);
      }
      return absl::InternalError(message);
    } else {
      json parsed = json::parse(result->body, nullptr, false);
      if (parsed.is_discarded()) {
        return absl::DataLossError(
            absl::StrCat(method, " ", path, ": response is not JSON"));
      }
      return parsed;
    }
    if (attempt < attempts && options_.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.retry_backoff_ms * attempt));
    }
  }
  return absl::UnavailableError(absl::StrCat(method, " ", options_.endpoint,
                                             path, " failed after ", attempts,
                                             " attempts: ", last_error));
}

absl::StatusOr<std::unique_ptr<RemoteLogitProvider>>
RemoteLogitProvider::Connect(RemoteOptions options) {
  auto client = std::make_unique<RemoteClient>(std::move(options));
  ASSIGN_OR_RETURN(const json body, client->Get("/v1/model"));
  ASSIGN_OR_RETURN(ModelInfo info, ParseModelInfo(body));
  if (client->options().model.empty()) {
    RemoteOptions named = client->options();
    named.model = info.model;
    client = std::make_unique<RemoteClient>(std::move(named));
  }
  return std::unique_ptr<RemoteLogitProvider>(
      new RemoteLogitProvider(std::move(client), std::move(info)));
}

absl::StatusOr<LogitVector> RemoteLogitProvider::Logits(
    const PromptContext& ctx) {
  ASSIGN_OR_RETURN(
      const json body,
      client_->Post("/v1/logits",
                    LogitsRequestJson(client_->options().model, ctx)));
  return ParseLogitsResponse(body, info_.vocab_size);
}

absl::StatusOr<std::vector<TokenId>> RemoteLogitProvider::Tokenize(
    std::string_view text) const {
  ASSIGN_OR_RETURN(
      const json body,
      client_->Post("/v1/tokenize", {{"text", std::string(text)}}));
  std::vector<TokenId> out;
  try {
    for (const json& id : body.at("token_ids")) {
      out.push_back(TokenId{id.get<int32_t>()});
    }
  } catch (const json::exception& e) {
    return absl::DataLossError(
        absl::StrCat("malformed tokenize response: ", e.what()));
  }
  return out;
}

absl::StatusOr<std::string> RemoteLogitProvider::Detokenize(
    std::span<const TokenId> tokens) const {
  json ids = json::array();
  for (TokenId t : tokens) ids.push_back(t.value);
  ASSIGN_OR_RETURN(const json body,
                   client_->Post("/v1/detokenize", {{"token_ids", ids}}));
  if (!body.contains("text") || !body["text"].is_string()) {
    return absl::DataLossError("malformed detokenize response");
  }
  return body["text"].get<std::string>();
}

absl::StatusOr<std::unique_ptr<RemoteEmbeddingProvider>>
RemoteEmbeddingProvider::Connect(RemoteOptions options) {
  auto client = std::make_unique<RemoteClient>(std::move(options));
  ASSIGN_OR_RETURN(const json body, client->Get("/v1/model"));
  ASSIGN_OR_RETURN(const ModelInfo info, ParseModelInfo(body));
  if (info.embedding_dim < 1) {
    return absl::FailedPreconditionError("server exposes no embedding model");
  }
  return std::unique_ptr<RemoteEmbeddingProvider>(
      new RemoteEmbeddingProvider(std::move(client), info.embedding_dim));
}

absl::StatusOr<std::vector<std::vector<double>>> RemoteEmbeddingProvider::Embed(
    std::span<const std::string> texts) {
  if (texts.empty()) return absl::InvalidArgumentError("nothing to embed");
  ASSIGN_OR_RETURN(
      const json body,
      client_->Post("/v1/embed", {{"texts", std::vector<std::string>(
                                                texts.begin(), texts.end())}}));
  std::vector<std::vector<double>> out;
  try {
    out = body.at("embeddings").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    return absl::DataLossError(
        absl::StrCat("malformed embed response: ", e.what()));
  }
  if (out.size() != texts.size()) {
    return absl::DataLossError("embed response has the wrong number of rows");
  }
  for (const auto& v : out) {
    if (static_cast<int>(v.size()) != dimension_) {
      return absl::DataLossError("embedding dimension mismatch");
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) {
      return absl::DataLossError("server returned a non-unit embedding");
    }
  }
  return out;
}

}  // namespace mozo
