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

#include "mozo/providers.h"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "mozo/io.h"
#include "mozo/status_macros.h"

namespace mozo {
namespace {

using nlohmann::json;

absl::StatusOr<json> ParseRecord(const std::string& line,
                                 const std::string& path, size_t line_no) {
  json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (record.is_discarded() || !record.is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ":", line_no, ": not a JSON object"));
  }
  return record;
}

absl::StatusOr<std::string> RequiredString(const json& record, const char* key,
                                           const std::string& where) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat(where, ": missing string field '", key, "'"));
  }
  return it->get<std::string>();
}

}  // namespace

PromptContext ZeroShotContext(std::string query_text,
                              std::span<const TokenId> prefix,
                              std::string template_id) {
  return PromptContext{{},
                       std::move(query_text),
                       {prefix.begin(), prefix.end()},
                       std::move(template_id)};
}

PromptContext OneShotContext(const Demonstration& demo, std::string query_text,
                             std::span<const TokenId> prefix,
                             std::string template_id) {
  return PromptContext{{demo},
                       std::move(query_text),
                       {prefix.begin(), prefix.end()},
                       std::move(template_id)};
}

absl::StatusOr<std::vector<TokenId>> LogitProvider::Tokenize(
    std::string_view text) const {
  std::vector<TokenId> out;
  for (absl::string_view word :
       absl::StrSplit(absl::string_view(text.data(), text.size()),
                      absl::ByAnyChar(" \t\n"), absl::SkipEmpty())) {
    int32_t id = -1;
    if (word.size() > 3 && word.substr(0, 3) == "tok") {
      const char* begin = word.data() + 3;
      const char* end = word.data() + word.size();
      auto [ptr, ec] = std::from_chars(begin, end, id);
      if (ec != std::errc() || ptr != end) id = -1;
    }
    if (id < 0 || id >= vocab_size()) {
      return absl::NotFoundError(
          absl::StrCat("'", word, "' is not in the vocabulary"));
    }
    out.push_back(TokenId{id});
  }
  return out;
}

absl::StatusOr<std::string> LogitProvider::Detokenize(
    std::span<const TokenId> tokens) const {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (t.value < 0 || t.value >= vocab_size()) {
      return absl::OutOfRangeError(
          absl::StrCat("token ", t.value, " outside vocabulary"));
    }
    words.push_back(absl::StrCat("tok", t.value));
  }
  return absl::StrJoin(words, " ");
}

absl::Status ValidateProviderLogits(const LogitVector& logits, int vocab_size) {
  if (logits.vocab_size() != vocab_size) {
    return absl::DataLossError(absl::StrCat("provider returned ",
                                            logits.vocab_size(),
                                            " logits, expected ", vocab_size));
  }
  for (double s : logits.scores()) {
    if (!std::isfinite(s)) {
      return absl::DataLossError("provider returned a non-finite logit");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<LogitVector> AuditingProvider::Logits(const PromptContext& ctx) {
  Call call;
  for (const Demonstration& d : ctx.demonstrations)
    call.demo_ids.push_back(d.id);
  call.query_text = ctx.query_text;
  call.prefix_length = ctx.prefix.size();
  {
    std::lock_guard<std::mutex> lock(mu_);
    calls_.push_back(std::move(call));
  }
  return inner_.Logits(ctx);
}

std::vector<AuditingProvider::Call> AuditingProvider::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

size_t AuditingProvider::call_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_.size();
}

void AuditingProvider::Clear() {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.clear();
}

absl::StatusOr<std::vector<Demonstration>> LoadDemonstrations(
    const std::string& path) {
  ASSIGN_OR_RETURN(const std::vector<std::string> lines, ReadLines(path));
  std::vector<Demonstration> demos;
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string where = absl::StrCat(path, ":", i + 1);
    ASSIGN_OR_RETURN(const json record, ParseRecord(lines[i], path, i + 1));
    Demonstration demo;
    ASSIGN_OR_RETURN(demo.id, RequiredString(record, "id", where));
    ASSIGN_OR_RETURN(demo.input_text, RequiredString(record, "input", where));
    ASSIGN_OR_RETURN(demo.output_text, RequiredString(record, "output", where));
    if (demo.input_text.empty() || demo.output_text.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": empty input or output"));
    }
    if (!seen.insert(demo.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": duplicate id '", demo.id, "'"));
    }
    demos.push_back(std::move(demo));
  }
  return demos;
}

absl::Status WriteDemonstrations(const std::string& path,
                                 std::span<const Demonstration> demos) {
  std::ostringstream out;
  for (const Demonstration& d : demos) {
    out << json{{"id", d.id},
                {"input", d.input_text},
                {"output", d.output_text}}
               .dump()
        << '\n';
  }
  return WriteFileAtomically(path, out.str());
}

absl::StatusOr<std::vector<Query>> LoadQueries(const std::string& path) {
  ASSIGN_OR_RETURN(const std::vector<std::string> lines, ReadLines(path));
  std::vector<Query> queries;
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string where = absl::StrCat(path, ":", i + 1);
    ASSIGN_OR_RETURN(const json record, ParseRecord(lines[i], path, i + 1));
    Query q;
    ASSIGN_OR_RETURN(q.id, RequiredString(record, "id", where));
    ASSIGN_OR_RETURN(q.input_text, RequiredString(record, "input", where));
    if (auto it = record.find("output");
        it != record.end() && it->is_string()) {
      q.reference = it->get<std::string>();
    }
    if (!seen.insert(q.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": duplicate id '", q.id, "'"));
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

}  // namespace mozo
