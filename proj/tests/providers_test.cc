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

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "mozo/dist.h"
#include "mozo/io.h"
#include "mozo/provider_spec.h"
#include "mozo/synthetic_lm.h"
#include "mozo/templates.h"
#include "test_util.h"

namespace mozo {
namespace {

using ::mozo::testing::StatusIs;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

std::unique_ptr<SyntheticLm> MakeLm(double gamma, uint64_t seed = 1,
                                    double member_bonus = 0.0) {
  SyntheticLmOptions o;
  o.vocab_size = 16;
  o.seed = seed;
  o.demo_influence = gamma;
  o.member_bonus = member_bonus;
  return *SyntheticLm::Create(o);
}

std::vector<double> Vec(const LogitVector& l) {
  return {l.scores().begin(), l.scores().end()};
}

std::string WriteTemp(const std::string& name, const std::string& body) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << body;
  return path;
}

const Demonstration kDemo{"a", "the weather is nice", "tok3 tok4"};
const Demonstration kOther{"b", "some other input", "tok5"};

TEST(SyntheticLmTest, Deterministic) {
  auto lm1 = MakeLm(1.0, 42);
  auto lm2 = MakeLm(1.0, 42);
  const std::vector<TokenId> prefix = {TokenId{3}, TokenId{4}};
  const PromptContext ctx = OneShotContext(kDemo, "q", prefix, "generic");
  EXPECT_EQ(*lm1->Logits(ctx), *lm1->Logits(ctx));
  EXPECT_EQ(*lm1->Logits(ctx), *lm2->Logits(ctx));
  EXPECT_NE(*lm1->Logits(ctx), *MakeLm(1.0, 43)->Logits(ctx));
}

TEST(SyntheticLmTest, ContextFieldsMatter) {
  auto lm = MakeLm(1.0);
  const std::vector<TokenId> p1 = {TokenId{1}};
  const std::vector<TokenId> p2 = {TokenId{2}};
  const LogitVector base = *lm->Logits(ZeroShotContext("q", p1, "generic"));
  EXPECT_NE(base, *lm->Logits(ZeroShotContext("q2", p1, "generic")));
  EXPECT_NE(base, *lm->Logits(ZeroShotContext("q", p2, "generic")));
  EXPECT_NE(base, *lm->Logits(ZeroShotContext("q", p1, "samsum")));
  EXPECT_NE(base, *lm->Logits(OneShotContext(kDemo, "q", p1, "generic")));
}

TEST(SyntheticLmTest, ZeroInfluenceIgnoresDemonstrations) {
  auto lm = MakeLm(0.0);
  for (const char* q : {"alpha", "beta", "gamma"}) {
    const LogitVector zero = *lm->Logits(ZeroShotContext(q, {}, "generic"));
    EXPECT_EQ(*lm->Logits(OneShotContext(kDemo, q, {}, "generic")), zero);
    EXPECT_EQ(*lm->Logits(OneShotContext(kOther, q, {}, "generic")), zero);
  }
}

TEST(SyntheticLmTest, InfluenceMonotonicity) {
  for (const char* q : {"q1", "q2", "q3", "q4"}) {
    double prev = -1.0;
    for (double gamma : {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      auto lm = MakeLm(gamma, 9);
      const LogProbDist zero =
          *LogSoftmax(*lm->Logits(ZeroShotContext(q, {}, "generic")));
      const LogProbDist one =
          *LogSoftmax(*lm->Logits(OneShotContext(kDemo, q, {}, "generic")));
      const double d = *SymmetricRenyiDivergence(one, zero, 2.0);
      if (gamma == 0.0) {
        EXPECT_EQ(d, 0.0);
      }
      EXPECT_GE(d, prev);
      prev = d;
    }
  }
}

TEST(SyntheticLmTest, ConcatEffectsAdd) {
  auto lm = MakeLm(0.7, 5);
  const std::vector<TokenId> prefix = {TokenId{7}};
  const std::vector<double> zero =
      Vec(*lm->Logits(ZeroShotContext("q", prefix, "generic")));
  const std::vector<double> a =
      Vec(*lm->Logits(OneShotContext(kDemo, "q", prefix, "generic")));
  const std::vector<double> b =
      Vec(*lm->Logits(OneShotContext(kOther, "q", prefix, "generic")));
  PromptContext both = ZeroShotContext("q", prefix, "generic");
  both.demonstrations = {kDemo, kOther};
  const std::vector<double> ab = Vec(*lm->Logits(both));
  for (size_t i = 0; i < zero.size(); ++i) {
    EXPECT_NEAR(ab[i] - zero[i], (a[i] - zero[i]) + (b[i] - zero[i]), 1e-12);
  }
}

TEST(SyntheticLmTest, EosBonusGrowsWithPrefix) {
  SyntheticLmOptions o;
  o.vocab_size = 8;
  o.demo_influence = 0.0;
  o.base_scale = 0.0;
  o.eos_token = 2;
  o.eos_slope = 0.5;
  auto lm = *SyntheticLm::Create(o);
  std::vector<TokenId> prefix;
  for (int len = 0; len < 5; ++len) {
    const LogitVector l = *lm->Logits(ZeroShotContext("q", prefix, "generic"));
    EXPECT_DOUBLE_EQ(l[2], 0.5 * len);
    EXPECT_DOUBLE_EQ(l[3], 0.0);
    prefix.push_back(TokenId{5});
  }
}

TEST(SyntheticLmTest, MemberBonusOnLabelToken) {
  auto plain = MakeLm(0.5, 3, 0.0);
  auto rigged = MakeLm(0.5, 3, 10.0);
  const Demonstration member{"m", "is this spam", "tok6"};
  const std::vector<double> a = Vec(
      *plain->Logits(OneShotContext(member, member.input_text, {}, "generic")));
  const std::vector<double> b = Vec(*rigged->Logits(
      OneShotContext(member, member.input_text, {}, "generic")));
  for (int i = 0; i < 16; ++i) {
    EXPECT_NEAR(b[i] - a[i], i == 6 ? 10.0 : 0.0, 1e-12);
  }
  // No bonus when the query differs from the demonstration input.
  EXPECT_EQ(*plain->Logits(OneShotContext(member, "another", {}, "generic")),
            *rigged->Logits(OneShotContext(member, "another", {}, "generic")));
}

TEST(SyntheticLmTest, Validation) {
  SyntheticLmOptions o;
  o.vocab_size = 1;
  EXPECT_FALSE(SyntheticLm::Create(o).ok());
  o = {};
  o.eos_token = 32;
  EXPECT_FALSE(SyntheticLm::Create(o).ok());
  o = {};
  o.demo_influence = -1.0;
  EXPECT_FALSE(SyntheticLm::Create(o).ok());
  auto lm = MakeLm(1.0);
  EXPECT_FALSE(lm->Logits(ZeroShotContext("q", {}, "no-such-template")).ok());
}

TEST(SyntheticLmTest, LogitsSatisfyProviderContract) {
  auto lm = MakeLm(2.0);
  const LogitVector l = *lm->Logits(OneShotContext(kDemo, "q", {}, "e2e"));
  EXPECT_EQ(l.vocab_size(), 16);
  EXPECT_OK(ValidateProviderLogits(l, 16));
  EXPECT_FALSE(ValidateProviderLogits(l, 8).ok());
  for (double x : l.scores()) EXPECT_TRUE(std::isfinite(x));
}

TEST(EmbedderTest, UnitNormAndDeterministic) {
  SyntheticEmbedder e(64, 3);
  const std::vector<std::string> texts = {"hello world", "hello world",
                                          "goodbye", ""};
  ASSERT_OK_AND_ASSIGN(const auto vecs, e.Embed(texts));
  ASSERT_EQ(vecs.size(), 4u);
  for (const auto& v : vecs) {
    ASSERT_EQ(v.size(), 64u);
    double n = 0;
    for (double x : v) n += x * x;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
  EXPECT_EQ(vecs[0], vecs[1]);
  EXPECT_NE(vecs[0], vecs[2]);
}

TEST(EmbedderTest, DistinctTextsAreNotParallel) {
  SyntheticEmbedder e(64, 0);
  std::vector<std::string> texts;
  for (int i = 0; i < 2000; ++i) texts.push_back("text " + std::to_string(i));
  ASSERT_OK_AND_ASSIGN(const auto vecs, e.Embed(texts));
  for (int i = 0; i < 2000; i += 2) {
    double dot = 0;
    for (int k = 0; k < 64; ++k) dot += vecs[i][k] * vecs[i + 1][k];
    EXPECT_LT(dot, 1.0 - 1e-9);
  }
}

TEST(CodecTest, RoundTrip) {
  auto lm = MakeLm(1.0);
  ASSERT_OK_AND_ASSIGN(const std::vector<TokenId> t,
                       lm->Tokenize("tok1  tok15\ttok0"));
  EXPECT_THAT(t, ElementsAre(TokenId{1}, TokenId{15}, TokenId{0}));
  EXPECT_EQ(*lm->Detokenize(t), "tok1 tok15 tok0");
  EXPECT_EQ(*lm->Detokenize({}), "");
  EXPECT_THAT(lm->Tokenize("tok16"),
              StatusIs(absl::StatusCode::kNotFound, "not in the vocabulary"));
  EXPECT_FALSE(lm->Tokenize("hello").ok());
  EXPECT_FALSE(lm->Tokenize("tok-1").ok());
}

TEST(AuditingProviderTest, RecordsDemonstrationIds) {
  auto lm = MakeLm(1.0);
  AuditingProvider audit(*lm);
  const std::vector<TokenId> prefix = {TokenId{2}};
  ASSERT_OK(audit.Logits(ZeroShotContext("q", prefix, "generic")).status());
  ASSERT_OK(audit.Logits(OneShotContext(kDemo, "q", {}, "generic")).status());
  const auto calls = audit.calls();
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_TRUE(calls[0].demo_ids.empty());
  EXPECT_EQ(calls[0].prefix_length, 1u);
  EXPECT_THAT(calls[1].demo_ids, ElementsAre("a"));
  EXPECT_EQ(audit.call_count(), 2u);
  audit.Clear();
  EXPECT_EQ(audit.call_count(), 0u);
}

TEST(TemplatesTest, DefaultsAndLookup) {
  for (const std::string id : {"generic", "samsum", "e2e", "wikilarge"}) {
    ASSERT_OK_AND_ASSIGN(const PromptTemplate t, FindTemplate(id));
    EXPECT_EQ(t.id, id);
  }
  EXPECT_THAT(FindTemplate("nope"), StatusIs(absl::StatusCode::kNotFound, ""));
}

TEST(TemplatesTest, RenderFillsPlaceholders) {
  const PromptTemplate t{"x", "FEW\n", "ZERO\n", "I:{input} O:{output}\n",
                         "Q:{query} A:"};
  EXPECT_EQ(RenderPrompt(t, ZeroShotContext("hi", {}, "x")), "ZERO\nQ:hi A:");
  EXPECT_EQ(RenderPrompt(t, OneShotContext(kOther, "hi", {}, "x")),
            "FEW\nI:some other input O:tok5\nQ:hi A:");
}

TEST(DemonstrationIoTest, RoundTrip) {
  const std::vector<Demonstration> demos = {kDemo, kOther};
  const std::string path = ::testing::TempDir() + "/demos_rt.jsonl";
  ASSERT_OK(WriteDemonstrations(path, demos));
  ASSERT_OK_AND_ASSIGN(const std::vector<Demonstration> back,
                       LoadDemonstrations(path));
  EXPECT_EQ(back, demos);
}

TEST(DemonstrationIoTest, RejectsInvalidRecords) {
  EXPECT_THAT(LoadDemonstrations(WriteTemp(
                  "dup.jsonl",
                  "{\"id\":\"a\",\"input\":\"x\",\"output\":\"y\"}\n"
                  "{\"id\":\"a\",\"input\":\"z\",\"output\":\"w\"}\n")),
              StatusIs(absl::StatusCode::kInvalidArgument, "duplicate"));
  EXPECT_FALSE(
      LoadDemonstrations(
          WriteTemp("empty_text.jsonl",
                    "{\"id\":\"a\",\"input\":\"\",\"output\":\"y\"}\n"))
          .ok());
  EXPECT_FALSE(LoadDemonstrations(WriteTemp("bad.jsonl", "{not json}\n")).ok());
  EXPECT_FALSE(LoadDemonstrations(WriteTemp("missing.jsonl",
                                            "{\"id\":\"a\",\"input\":\"x\"}\n"))
                   .ok());
  EXPECT_FALSE(LoadDemonstrations("/nonexistent/file.jsonl").ok());
}

TEST(QueryIoTest, ReferenceIsOptional) {
  ASSERT_OK_AND_ASSIGN(
      const std::vector<Query> qs,
      LoadQueries(
          WriteTemp("queries.jsonl",
                    "{\"id\":\"q1\",\"input\":\"a\",\"output\":\"r\"}\r\n"
                    "\n"
                    "{\"id\":\"q2\",\"input\":\"b\"}\n")));
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].reference, "r");
  EXPECT_FALSE(qs[1].reference.has_value());
}

TEST(IoTest, AtomicWriteReplacesFile) {
  const std::string path = ::testing::TempDir() + "/atomic.txt";
  ASSERT_OK(WriteFileAtomically(path, "one"));
  ASSERT_OK(WriteFileAtomically(path, "two"));
  EXPECT_EQ(*ReadFile(path), "two");
  EXPECT_FALSE(std::ifstream(path + ".tmp").good());
}

TEST(ProviderSpecTest, ParseAndHash) {
  ASSERT_OK_AND_ASSIGN(
      const ProviderSpec spec,
      ParseProviderSpec(nlohmann::json::parse(
          R"({"kind":"synthetic","vocab_size":24,"seed":7,"influence":0.5})")));
  EXPECT_EQ(spec.kind, ProviderKind::kSynthetic);
  EXPECT_EQ(spec.synthetic.vocab_size, 24);
  EXPECT_EQ(spec.synthetic.seed, 7u);
  EXPECT_EQ(spec.synthetic.demo_influence, 0.5);
  ASSERT_OK_AND_ASSIGN(const ProviderSpec again,
                       ParseProviderSpec(ToJson(spec)));
  EXPECT_EQ(ProviderSpecHash(spec), ProviderSpecHash(again));
  ProviderSpec changed = spec;
  changed.synthetic.seed = 8;
  EXPECT_NE(ProviderSpecHash(spec), ProviderSpecHash(changed));
  ASSERT_OK_AND_ASSIGN(auto lm, MakeLogitProvider(spec));
  EXPECT_EQ(lm->vocab_size(), 24);
}

TEST(ProviderSpecTest, Errors) {
  EXPECT_FALSE(
      ParseProviderSpec(nlohmann::json::parse(R"({"kind":"gpu"})")).ok());
  EXPECT_FALSE(
      ParseProviderSpec(nlohmann::json::parse(R"({"kind":"trace"})")).ok());
  EXPECT_FALSE(
      ParseProviderSpec(nlohmann::json::parse(R"({"kind":"remote"})")).ok());
  EXPECT_FALSE(ParseProviderSpec(nlohmann::json::parse(
                                     R"({"kind":"synthetic","vocab_size":1})"))
                   .ok());
}

}  // namespace
}  // namespace mozo
