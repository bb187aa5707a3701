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

#ifndef MOZO_TRACE_H_
#define MOZO_TRACE_H_

#include <cstdio>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mozo/providers.h"

namespace mozo {

// Trace files are line-delimited JSON. The first line is a header
//   {"format": "mozo-trace", "version": 1, "vocab_size": V, "eos_token": E,
//    "sidecar": "<file>.bin" | null}
// and every further line one record
//   {"demo_ids": [...] , "query_hash": "<16 hex>", "prefix": [...],
//    "template_id": "...", "logits": [...], "sidecar_offset": N}
// Logits in the JSON are rounded to 9 significant digits. When the sidecar
// exists it holds the exact little-endian float64 arrays, and replay reads
// from it so that it is bit-exact.

// Canonical replay key: demo ids (empty for zero-shot), query hash, prefix
// token ids and template id.
std::string TraceKey(const PromptContext& ctx);

class TraceWriter {
 public:
  static absl::StatusOr<std::unique_ptr<TraceWriter>> Open(
      const std::string& path, int vocab_size, TokenId eos_token,
      bool write_sidecar = true);
  ~TraceWriter();

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  // Appends one record unless the key was already written.
  absl::Status Append(const PromptContext& ctx, const LogitVector& logits);

  size_t records() const;

 private:
  TraceWriter(std::FILE* json, std::FILE* sidecar, int vocab_size)
      : json_(json), sidecar_(sidecar), vocab_size_(vocab_size) {}

  mutable std::mutex mu_;
  std::FILE* json_;
  std::FILE* sidecar_;
  int vocab_size_;
  int64_t sidecar_doubles_ = 0;
  std::set<std::string> keys_;
};

// Replays a trace. Lookups are exact-match on TraceKey; a miss is an
// "uncovered context" NotFound error.
class TraceProvider : public LogitProvider {
 public:
  static absl::StatusOr<std::unique_ptr<TraceProvider>> Load(
      const std::string& path);

  int vocab_size() const override { return vocab_size_; }
  TokenId eos_token() const override { return eos_token_; }
  absl::StatusOr<LogitVector> Logits(const PromptContext& ctx) override;

  size_t size() const { return records_.size(); }
  bool exact() const { return exact_; }

 private:
  TraceProvider() = default;

  int vocab_size_ = 0;
  TokenId eos_token_;
  bool exact_ = false;
  std::unordered_map<std::string, std::vector<double>> records_;
};

// Forwards to `inner` and records every answered context.
class RecordingProvider : public LogitProvider {
 public:
  RecordingProvider(LogitProvider& inner, TraceWriter& writer)
      : inner_(inner), writer_(writer) {}

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

 private:
  LogitProvider& inner_;
  TraceWriter& writer_;
};

}  // namespace mozo

#endif  // MOZO_TRACE_H_
