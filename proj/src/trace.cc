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

#include "mozo/trace.h"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "mozo/hashing.h"
#include "mozo/io.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

using nlohmann::json;

constexpr char kFormat[] = "mozo-trace";
constexpr int kVersion = 1;

json KeyJson(const PromptContext& ctx) {
  json demo_ids = json::array();
  for (const Demonstration& d : ctx.demonstrations) demo_ids.push_back(d.id);
  json prefix = json::array();
  for (TokenId t : ctx.prefix) prefix.push_back(t.value);
  return {{"demo_ids", demo_ids},
          {"query_hash", HexDigest(Fnv1a64(ctx.query_text))},
          {"prefix", prefix},
          {"template_id", ctx.template_id}};
}

std::string KeyFromRecord(const json& record) {
  return json{{"demo_ids", record.at("demo_ids")},
              {"query_hash", record.at("query_hash")},
              {"prefix", record.at("prefix")},
              {"template_id", record.at("template_id")}}
      .dump();
}

double RoundTo9Digits(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return std::strtod(buf, nullptr);
}

static_assert(std::endian::native == std::endian::little,
              "trace sidecars are little-endian float64");

}  // namespace

std::string TraceKey(const PromptContext& ctx) { return KeyJson(ctx).dump(); }

absl::StatusOr<std::unique_ptr<TraceWriter>> TraceWriter::Open(
    const std::string& path, int vocab_size, TokenId eos_token,
    bool write_sidecar) {
  std::FILE* json_file = std::fopen(path.c_str(), "w");
  if (json_file == nullptr) {
    return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  }
  std::FILE* sidecar = nullptr;
  const std::string sidecar_path = path + ".bin";
  if (write_sidecar) {
    sidecar = std::fopen(sidecar_path.c_str(), "wb");
    if (sidecar == nullptr) {
      std::fclose(json_file);
      return absl::PermissionDeniedError(
          absl::StrCat("cannot write ", sidecar_path));
    }
  }
  json header = {{"format", kFormat},
                 {"version", kVersion},
                 {"vocab_size", vocab_size},
                 {"eos_token", eos_token.value}};
  header["sidecar"] =
      write_sidecar
          ? json(std::filesystem::path(sidecar_path).filename().string())
          : json();
  const std::string line = header.dump() + "\n";
  std::fputs(line.c_str(), json_file);
  std::fflush(json_file);
  return std::unique_ptr<TraceWriter>(
      new TraceWriter(json_file, sidecar, vocab_size));
}

TraceWriter::~TraceWriter() {
  if (json_ != nullptr) std::fclose(json_);
  if (sidecar_ != nullptr) std::fclose(sidecar_);
}

absl::Status TraceWriter::Append(const PromptContext& ctx,
                                 const LogitVector& logits) {
  if (logits.vocab_size() != vocab_size_) {
    return absl::InvalidArgumentError("logit vector size differs from trace");
  }
  json record = KeyJson(ctx);
  const std::string key = record.dump();
  std::lock_guard<std::mutex> lock(mu_);
  if (!keys_.insert(key).second) return absl::OkStatus();

  json values = json::array();
  for (double s : logits.scores()) values.push_back(RoundTo9Digits(s));
  record["logits"] = std::move(values);
  if (sidecar_ != nullptr) {
    record["sidecar_offset"] = sidecar_doubles_;
    const size_t n = logits.scores().size();
    if (std::fwrite(logits.scores().data(), sizeof(double), n, sidecar_) != n) {
      return absl::DataLossError("trace sidecar write failed");
    }
    std::fflush(sidecar_);
    sidecar_doubles_ += static_cast<int64_t>(n);
  }
  const std::string line = record.dump() + "\n";
  if (std::fputs(line.c_str(), json_) < 0) {
    return absl::DataLossError("trace write failed");
  }
  std::fflush(json_);
  return absl::OkStatus();
}

size_t TraceWriter::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_.size();
}

absl::StatusOr<std::unique_ptr<TraceProvider>> TraceProvider::Load(
    const std::string& path) {
  ASSIGN_OR_RETURN(const std::vector<std::string> lines, ReadLines(path));
  if (lines.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": empty trace"));
  }
  const json header = json::parse(lines[0], nullptr, false);
  if (header.is_discarded() || header.value("format", "") != kFormat) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": not a mozo trace file"));
  }
  auto provider = std::unique_ptr<TraceProvider>(new TraceProvider());
  provider->vocab_size_ = header.at("vocab_size").get<int>();
  provider->eos_token_ = TokenId{header.at("eos_token").get<int32_t>()};

  std::string sidecar;
  if (header.contains("sidecar") && header["sidecar"].is_string()) {
    const auto sidecar_path = std::filesystem::path(path).parent_path() /
                              header["sidecar"].get<std::string>();
    auto bytes = ReadFile(sidecar_path.string());
    if (bytes.ok()) sidecar = std::move(*bytes);
  }
  provider->exact_ = !sidecar.empty() || lines.size() == 1;

  const size_t vocab = static_cast<size_t>(provider->vocab_size_);
  for (size_t i = 1; i < lines.size(); ++i) {
    const json record = json::parse(lines[i], nullptr, false);
    if (record.is_discarded()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", i + 1, ": malformed record"));
    }
    std::vector<double> logits;
    try {
      if (!sidecar.empty() && record.contains("sidecar_offset")) {
        const size_t offset = record["sidecar_offset"].get<size_t>();
        if ((offset + vocab) * sizeof(double) > sidecar.size()) {
          return absl::DataLossError(
              absl::StrCat(path, ":", i + 1, ": sidecar truncated"));
        }
        logits.resize(vocab);
        std::memcpy(logits.data(), sidecar.data() + offset * sizeof(double),
                    vocab * sizeof(double));
      } else {
        logits = record.at("logits").get<std::vector<double>>();
        provider->exact_ = false;
      }
      if (logits.size() != vocab) {
        return absl::DataLossError(
            absl::StrCat(path, ":", i + 1, ": wrong logit count"));
      }
      provider->records_.emplace(KeyFromRecord(record), std::move(logits));
    } catch (const json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", i + 1, ": ", e.what()));
    }
  }
  return provider;
}

absl::StatusOr<LogitVector> TraceProvider::Logits(const PromptContext& ctx) {
  auto it = records_.find(TraceKey(ctx));
  if (it == records_.end()) {
    return absl::NotFoundError(
        absl::StrCat("uncovered context: ", TraceKey(ctx)));
  }
  return LogitVector::Create(it->second);
}

absl::StatusOr<LogitVector> RecordingProvider::Logits(
    const PromptContext& ctx) {
  ASSIGN_OR_RETURN(LogitVector logits, inner_.Logits(ctx));
  RETURN_IF_ERROR(writer_.Append(ctx, logits));
  return logits;
}

}  // namespace mozo
