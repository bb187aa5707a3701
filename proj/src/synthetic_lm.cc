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

#include "mozo/synthetic_lm.h"

#include <cmath>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "mozo/hashing.h"
#include "mozo/status_macros.h"
#include "mozo/templates.h"

namespace mozo {
namespace {

constexpr uint64_t kBaseDomain = 0x62617365ULL;    // "base"
constexpr uint64_t kEffectDomain = 0x64656d6fULL;  // "demo"
constexpr uint64_t kEmbedDomain = 0x656d6264ULL;   // "embd"

double UnitFromBits(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal addressed by (key, index).
double HashedGaussian(uint64_t key, uint64_t index) {
  const double u1 = UnitFromBits(Mix64(HashCombine(key, 2 * index)));
  const double u2 = UnitFromBits(Mix64(HashCombine(key, 2 * index + 1)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t PrefixHash(std::span<const TokenId> prefix) {
  uint64_t h = Mix64(prefix.size());
  for (TokenId t : prefix) h = HashCombine(h, static_cast<uint64_t>(t.value));
  return h;
}

uint64_t TemplateHash(const PromptTemplate& t) {
  return Fnv1a64(absl::StrCat(t.id, "\x1f", t.few_shot_header, "\x1f",
                              t.zero_shot_header, "\x1f", t.demo_block, "\x1f",
                              t.query_block));
}

uint64_t DemoHash(const Demonstration& d) {
  return Fnv1a64(absl::StrCat(d.input_text, "\x1f", d.output_text));
}

}  // namespace

absl::Status SyntheticLmOptions::Validate() const {
  if (vocab_size < 2) {
    return absl::InvalidArgumentError("synthetic LM needs vocab_size >= 2");
  }
  if (eos_token < 0 || eos_token >= vocab_size) {
    return absl::InvalidArgumentError("EOS token outside vocabulary");
  }
  if (!std::isfinite(demo_influence) || demo_influence < 0.0 ||
      !std::isfinite(base_scale) || base_scale < 0.0 ||
      !std::isfinite(eos_slope) || !std::isfinite(member_bonus)) {
    return absl::InvalidArgumentError("synthetic LM scales must be finite");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::unique_ptr<SyntheticLm>> SyntheticLm::Create(
    SyntheticLmOptions options) {
  RETURN_IF_ERROR(options.Validate());
  return std::unique_ptr<SyntheticLm>(new SyntheticLm(std::move(options)));
}

absl::StatusOr<LogitVector> SyntheticLm::Logits(const PromptContext& ctx) {
  ASSIGN_OR_RETURN(const PromptTemplate tmpl, FindTemplate(ctx.template_id));
  const int vocab = options_.vocab_size;
  const uint64_t query_hash = Fnv1a64(ctx.query_text);
  const uint64_t prefix_hash = PrefixHash(ctx.prefix);

  const uint64_t base_key = HashCombine(
      HashCombine(HashCombine(HashCombine(options_.seed, kBaseDomain),
                              TemplateHash(tmpl)),
                  query_hash),
      prefix_hash);
  std::vector<double> scores(vocab);
  for (int v = 0; v < vocab; ++v) {
    scores[v] = options_.base_scale * HashedGaussian(base_key, v);
  }

  for (const Demonstration& demo : ctx.demonstrations) {
    const uint64_t effect_key = HashCombine(
        HashCombine(HashCombine(HashCombine(options_.seed, kEffectDomain),
                                DemoHash(demo)),
                    query_hash),
        prefix_hash);
    if (options_.demo_influence != 0.0) {
      for (int v = 0; v < vocab; ++v) {
        scores[v] += options_.demo_influence * HashedGaussian(effect_key, v);
      }
    }
    if (options_.member_bonus != 0.0 && demo.input_text == ctx.query_text) {
      auto label = Tokenize(demo.output_text);
      if (label.ok() && !label->empty()) {
        scores[label->front().value] += options_.member_bonus;
      }
    }
  }

  scores[options_.eos_token] +=
      options_.eos_slope * static_cast<double>(ctx.prefix.size());
  return LogitVector::Create(std::move(scores));
}

absl::StatusOr<std::vector<std::vector<double>>> SyntheticEmbedder::Embed(
    std::span<const std::string> texts) {
  if (texts.empty()) return absl::InvalidArgumentError("nothing to embed");
  if (dimension_ < 1)
    return absl::InvalidArgumentError("dimension must be >= 1");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) {
    const uint64_t key =
        HashCombine(HashCombine(seed_, kEmbedDomain), Fnv1a64(text));
    std::vector<double> v(dimension_);
    double norm2 = 0.0;
    for (int i = 0; i < dimension_; ++i) {
      v[i] = HashedGaussian(key, i);
      norm2 += v[i] * v[i];
    }
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace mozo
