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

#include "mozo/evaluation.h"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "mozo/synthetic_lm.h"
#include "test_util.h"

namespace mozo {
namespace {

using ::mozo::testing::MakeDemos;
using ::mozo::testing::StatusIs;

TEST(RougeTest, Examples) {
  EXPECT_DOUBLE_EQ(RougeLF1("the cat sat on the mat", "the cat sat on the mat"),
                   1.0);
  EXPECT_DOUBLE_EQ(RougeLF1("alpha beta", "gamma delta"), 0.0);
  EXPECT_DOUBLE_EQ(RougeLF1("the cat sat", "the cat"), 0.8);
}

TEST(RougeTest, CaseFoldsAndSplitsOnWhitespace) {
  EXPECT_THAT(RougeTokenize("  The\tCAT\n sat "),
              ::testing::ElementsAre("the", "cat", "sat"));
  EXPECT_DOUBLE_EQ(RougeLF1("THE Cat", "the cat"), 1.0);
  EXPECT_DOUBLE_EQ(RougeLF1("", "the cat"), 0.0);
  EXPECT_DOUBLE_EQ(RougeLF1("the cat", ""), 0.0);
  EXPECT_DOUBLE_EQ(RougeLF1("", ""), 0.0);
}

TEST(RougeTest, LcsIsNotContiguous) {
  // LCS of "a b c d e" and "a x c y e" is "a c e".
  const double p = 3.0 / 5, r = 3.0 / 5;
  EXPECT_DOUBLE_EQ(RougeLF1("a b c d e", "a x c y e"), 2 * p * r / (p + r));
}

TEST(RougeTest, FuzzedInputsStayInUnitIntervalAndAreSymmetric) {
  Rng rng(31);
  const std::vector<std::string> words = {"a", "b", "c", "d", "A", "e"};
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::string> x(rng.UniformInt(8)), y(rng.UniformInt(8));
    for (auto& w : x) w = words[rng.UniformInt(words.size())];
    for (auto& w : y) w = words[rng.UniformInt(words.size())];
    const double f = RougeLF1(x, y);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_DOUBLE_EQ(f, RougeLF1(y, x));
  }
}

std::vector<ScoredExample> Scored(const std::vector<double>& members,
                                  const std::vector<double>& nonmembers) {
  std::vector<ScoredExample> out;
  for (double s : members) out.push_back({"m", s, true});
  for (double s : nonmembers) out.push_back({"n", s, false});
  return out;
}

TEST(AucTest, Examples) {
  EXPECT_DOUBLE_EQ(*AucRoc(Scored({0.9, 0.8}, {0.1, 0.2, 0.3})), 1.0);
  EXPECT_DOUBLE_EQ(*AucRoc(Scored({0.4, 0.4}, {0.4, 0.4, 0.4})), 0.5);
  EXPECT_DOUBLE_EQ(*AucRoc(Scored({0.9}, {0.1, 0.95})), 0.5);
  EXPECT_DOUBLE_EQ(*AucRoc(Scored({0.1}, {0.5, 0.9})), 0.0);
}

TEST(AucTest, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  std::vector<double> m(20), n(60);
  for (double& v : m) v = rng.NextUniform();
  for (double& v : n) v = rng.NextUniform() * 0.8;
  const double base = *AucRoc(Scored(m, n));
  for (double& v : m) v = std::exp(3 * v) - 7;
  for (double& v : n) v = std::exp(3 * v) - 7;
  EXPECT_DOUBLE_EQ(*AucRoc(Scored(m, n)), base);
}

TEST(AucTest, Errors) {
  EXPECT_THAT(AucRoc(Scored({0.1, 0.2}, {})),
              StatusIs(absl::StatusCode::kInvalidArgument, ""));
  EXPECT_FALSE(AucRoc(Scored({}, {0.3})).ok());
  EXPECT_FALSE(AucRoc(Scored({NAN}, {0.3})).ok());
}

TEST(SummarizeTest, SampleStandardDeviation) {
  const std::vector<double> v = {1, 2, 3, 4};
  const MeanStd s = Summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  const std::vector<double> one = {7};
  EXPECT_EQ(Summarize(one).stddev, 0.0);
}

std::unique_ptr<SyntheticLm> Lm(double gamma, double member_bonus) {
  SyntheticLmOptions o;
  o.vocab_size = 16;
  o.seed = 8;
  o.demo_influence = gamma;
  o.member_bonus = member_bonus;
  return *SyntheticLm::Create(o);
}

TEST(MembershipScoreTest, IsAProbabilityAndLabelsSumBelowOne) {
  auto lm = Lm(1.0, 0.0);
  const auto demos = MakeDemos(3);
  double total = 0.0;
  for (int label = 1; label < 16; ++label) {
    Demonstration q = demos[1];
    q.output_text = "tok" + std::to_string(label);
    ASSERT_OK_AND_ASSIGN(const double s,
                         MiaMembershipScore(*lm, demos[0], q, "generic"));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    total += s;
  }
  EXPECT_LE(total, 1.0 + 1e-12);
}

TEST(MembershipScoreTest, RiggedMemberScoreIsNearOne) {
  auto lm = Lm(1.0, 10.0);
  const auto demos = MakeDemos(3);
  ASSERT_OK_AND_ASSIGN(const double member,
                       MiaMembershipScore(*lm, demos[0], demos[0], "generic"));
  ASSERT_OK_AND_ASSIGN(const double other,
                       MiaMembershipScore(*lm, demos[0], demos[1], "generic"));
  EXPECT_GT(member, 0.95);
  EXPECT_LT(other, member);
}

TEST(MembershipScoreTest, LabelMustBeOneKnownToken) {
  auto lm = Lm(1.0, 0.0);
  EXPECT_EQ(LabelToken(*lm, "tok3")->value, 3);
  EXPECT_FALSE(LabelToken(*lm, "tok3 tok4").ok());
  EXPECT_FALSE(LabelToken(*lm, "tok99").ok());
  EXPECT_FALSE(LabelToken(*lm, "").ok());
  Demonstration q = MakeDemos(1)[0];
  q.output_text = "positive";
  EXPECT_FALSE(MiaMembershipScore(*lm, q, q, "generic").ok());
}

// Scores that ignore membership: a hash of the pair mapped to [0, 1).
MembershipScorer BlindScorer() {
  return [](const Demonstration& member,
            const Demonstration& query) -> absl::StatusOr<double> {
    Rng rng(std::hash<std::string>{}(member.id + "|" + query.id));
    return rng.NextUniform();
  };
}

TEST(MiaRunTest, BlindScoresGiveChanceAuc) {
  const auto pool = MakeDemos(300);
  MiaConfig config;
  config.seed = 1;
  ASSERT_OK_AND_ASSIGN(const MiaResult r, MiaRun(pool, config, BlindScorer()));
  ASSERT_EQ(r.pooled_auc.size(), 5u);
  ASSERT_EQ(r.per_attack_auc.size(), 5u);
  EXPECT_NEAR(r.pooled.mean, 0.5, 0.05);
}

TEST(MiaRunTest, RiggedProviderSeparatesPerfectly) {
  auto lm = Lm(1.0, 10.0);
  const auto pool = MakeDemos(120);
  MiaConfig config;
  config.seed = 2;
  ASSERT_OK_AND_ASSIGN(const MiaResult r,
                       MiaRun(pool, config, NonPrivateScorer(*lm, "generic")));
  EXPECT_GE(r.pooled.mean, 0.99);
}

TEST(MiaRunTest, NullInfluenceIsExactlyChance) {
  auto lm = Lm(0.0, 0.0);
  const auto pool = MakeDemos(80);
  MiaConfig config;
  config.repetitions = 2;
  ASSERT_OK_AND_ASSIGN(const MiaResult r,
                       MiaRun(pool, config, NonPrivateScorer(*lm, "generic")));
  for (double auc : r.pooled_auc) EXPECT_NEAR(auc, 0.5, 1e-12);
}

TEST(MiaRunTest, PrivateMechanismIsNearChanceWhileNonPrivateLeaks) {
  auto lm = Lm(1.0, 10.0);
  const auto pool = MakeDemos(120);
  MiaConfig config;
  config.seed = 3;
  config.repetitions = 3;
  MechanismParams params;
  params.top_k = 16;
  params.beta = 1e-3;
  params.alpha = 2;
  ASSERT_OK_AND_ASSIGN(
      const MiaResult dp,
      MiaRun(pool, config, PrivateScorer(*lm, "generic", params)));
  ASSERT_OK_AND_ASSIGN(const MiaResult open,
                       MiaRun(pool, config, NonPrivateScorer(*lm, "generic")));
  EXPECT_LT(dp.pooled.mean, 0.6);
  EXPECT_GT(open.pooled.mean, dp.pooled.mean + 0.3);
}

TEST(MiaRunTest, ConfigChecks) {
  MiaConfig config;
  EXPECT_OK(config.Validate());
  config.nonmembers_per_attack = 49;
  EXPECT_FALSE(config.Validate().ok());
  config = MiaConfig{};
  config.repetitions = 0;
  EXPECT_FALSE(config.Validate().ok());
  EXPECT_FALSE(MiaRun(MakeDemos(50), MiaConfig{}, BlindScorer()).ok());
}

TEST(MiaRunTest, Deterministic) {
  const auto pool = MakeDemos(100);
  MiaConfig config;
  config.repetitions = 2;
  config.seed = 77;
  const MiaResult a = *MiaRun(pool, config, BlindScorer());
  const MiaResult b = *MiaRun(pool, config, BlindScorer());
  EXPECT_EQ(a.pooled_auc, b.pooled_auc);
}

TEST(LambdaTraceTest, AveragesOverSurvivingRecords) {
  GenerationRecord a, b;
  a.per_step_min_lambda = {0.2, 0.4, 0.6};
  a.steps_used = 3;
  b.per_step_min_lambda = {0.4, 0.8};
  b.steps_used = 2;
  const std::vector<GenerationRecord> records = {a, b};
  const std::vector<double> trace = LambdaTraceAggregate(records);
  ASSERT_EQ(trace.size(), 3u);
  EXPECT_DOUBLE_EQ(trace[0], 0.3);
  EXPECT_DOUBLE_EQ(trace[1], 0.6);
  EXPECT_DOUBLE_EQ(trace[2], 0.6);
  const std::string tsv = LambdaTraceTsv(records);
  EXPECT_THAT(tsv, ::testing::StartsWith("step\tmean_min_lambda\tn_records\n"));
  EXPECT_THAT(tsv, ::testing::HasSubstr("\n1\t0.3"));
  EXPECT_THAT(tsv, ::testing::HasSubstr("\t2\n"));
  EXPECT_THAT(tsv, ::testing::EndsWith("\t1\n"));
  EXPECT_TRUE(LambdaTraceAggregate({}).empty());
}

}  // namespace
}  // namespace mozo
