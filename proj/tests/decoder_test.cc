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

#include "mozo/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
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
using ::mozo::testing::TableProvider;

// ---------------------------------------------------------------------------
// Independent probability-space re-implementation of one private step, used
// as a brute-force oracle. Shares no code with the library.

std::vector<int> OracleTopK(const std::vector<double>& logits, int k) {
  std::vector<int> idx(logits.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return logits[a] > logits[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Softmax of a * x + b * y restricted to `support`, as a full-vocabulary
// probability vector.
std::vector<double> OracleSoftmax(const std::vector<double>& x,
                                  const std::vector<double>& y, double a,
                                  double b, const std::vector<int>& support) {
  std::vector<double> p(x.size(), 0.0);
  double hi = -1e300;
  for (int i : support) hi = std::max(hi, a * x[i] + b * y[i]);
  double z = 0.0;
  for (int i : support) z += p[i] = std::exp(a * x[i] + b * y[i] - hi);
  for (int i : support) p[i] /= z;
  return p;
}

double OracleRenyi(const std::vector<double>& p, const std::vector<double>& q,
                   double alpha, const std::vector<int>& support) {
  double s = 0.0;
  for (int i : support) s += std::pow(p[i], alpha) * std::pow(q[i], 1 - alpha);
  return std::log(s) / (alpha - 1);
}

double OracleLambda(const std::vector<double>& one,
                    const std::vector<double>& zero,
                    const std::vector<int>& support, double beta, double alpha,
                    double lambda_max) {
  const std::vector<double> p0 = OracleSoftmax(zero, zero, 1, 0, support);
  auto ok = [&](double l) {
    const std::vector<double> m = OracleSoftmax(one, zero, l, 1 - l, support);
    return std::max(OracleRenyi(m, p0, alpha, support),
                    OracleRenyi(p0, m, alpha, support)) <= beta * alpha;
  };
  if (ok(lambda_max)) return lambda_max;
  double lo = 0.0, hi = lambda_max;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::vector<double> OracleStep(const std::vector<double>& zero,
                               const std::vector<std::vector<double>>& ones,
                               int k, double beta, double alpha,
                               double lambda_max) {
  const std::vector<int> support = OracleTopK(zero, k);
  std::vector<double> prod(zero.size(), 0.0);
  for (int i : support) prod[i] = 1.0;
  for (const auto& one : ones) {
    const double l = OracleLambda(one, zero, support, beta, alpha, lambda_max);
    const std::vector<double> m = OracleSoftmax(one, zero, l, 1 - l, support);
    for (int i : support) prod[i] *= m[i];
  }
  const double z = std::accumulate(prod.begin(), prod.end(), 0.0);
  for (double& v : prod) v /= z;
  return prod;
}

double TotalVariation(const LogProbDist& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (int i = 0; i < p.vocab_size(); ++i) tv += std::abs(p.prob(i) - q[i]);
  return 0.5 * tv;
}

double TotalVariation(const LogProbDist& p, const LogProbDist& q) {
  std::vector<double> qv(q.vocab_size());
  for (int i = 0; i < q.vocab_size(); ++i) qv[i] = q.prob(i);
  return TotalVariation(p, qv);
}

LogitVector L(std::vector<double> v) { return *LogitVector::Create(v); }

std::unique_ptr<SyntheticLm> Lm(double gamma, int vocab = 16,
                                uint64_t seed = 3) {
  SyntheticLmOptions o;
  o.vocab_size = vocab;
  o.demo_influence = gamma;
  o.seed = seed;
  return *SyntheticLm::Create(o);
}

DecodingConfig Config(const LogitProvider& provider) {
  DecodingConfig c;
  c.n_shots = 2;
  c.top_k = 6;
  c.t_max = 10;
  c.beta = 0.2;
  c.alpha = 3;
  c.eos_token = provider.eos_token();
  c.seed = 17;
  return c;
}

// ---------------------------------------------------------------------------

TEST(SubsampleTest, InclusionFrequencyAndNoDuplicates) {
  auto pool = *DemoPool::Create(MakeDemos(10));
  Rng rng(2024);
  std::map<std::string, int> hits;
  constexpr int kTrials = 100000;
  for (int t = 0; t < kTrials; ++t) {
    ASSERT_OK_AND_ASSIGN(const auto draw, Subsample(pool, 4, rng));
    ASSERT_EQ(draw.size(), 4u);
    std::set<std::string> ids;
    for (const auto& d : draw) ids.insert(d.id);
    ASSERT_EQ(ids.size(), 4u);
    for (const auto& id : ids) ++hits[id];
  }
  ASSERT_EQ(hits.size(), 10u);
  for (const auto& [id, n] : hits) {
    EXPECT_NEAR(static_cast<double>(n) / kTrials, 0.4, 0.01) << id;
  }
}

TEST(SubsampleTest, WholePoolAndErrors) {
  auto pool = *DemoPool::Create(MakeDemos(5));
  Rng rng(1);
  ASSERT_OK_AND_ASSIGN(auto all, Subsample(pool, 5, rng));
  std::set<std::string> ids;
  for (const auto& d : all) ids.insert(d.id);
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_THAT(Subsample(pool, 6, rng),
              StatusIs(absl::StatusCode::kInvalidArgument, "cannot draw"));
}

TEST(SubsampleTest, DeterministicGivenSeed) {
  auto pool = *DemoPool::Create(MakeDemos(20));
  Rng a(9), b(9);
  for (int t = 0; t < 50; ++t) {
    EXPECT_EQ(*Subsample(pool, 4, a), *Subsample(pool, 4, b));
  }
}

TEST(DemoPoolTest, RejectsEmptyAndDuplicates) {
  EXPECT_FALSE(DemoPool::Create({}).ok());
  auto demos = MakeDemos(2);
  demos[1].id = demos[0].id;
  EXPECT_THAT(DemoPool::Create(demos),
              StatusIs(absl::StatusCode::kInvalidArgument, "duplicate"));
}

TEST(PrivateStepTest, MatchesBruteForceOracleOnTinyInstance) {
  const std::vector<double> zero = {1.0, 0.2, -0.5, 2.0, 0.7, -1.5, 0.0, 1.4};
  const std::vector<std::vector<double>> ones = {
      {-0.3, 2.5, 0.1, 1.0, -1.0, 0.4, 3.0, 0.2},
      {2.2, -0.7, 1.8, 0.3, 0.9, -0.2, 0.5, -1.1}};
  MechanismParams params;
  params.top_k = 5;
  params.alpha = 4;
  params.bisection.abs_tolerance = 1e-14;
  params.bisection.max_iterations = 200;
  for (double beta : {0.001, 0.01, 0.05, 0.2, 1.0, 10.0}) {
    params.beta = beta;
    const std::vector<LogitVector> one_shots = {L(ones[0]), L(ones[1])};
    ASSERT_OK_AND_ASSIGN(
        const PrivateNextToken next,
        PrivateNextTokenDistribution(L(zero), one_shots, params));
    const std::vector<double> oracle =
        OracleStep(zero, ones, 5, beta, 4, params.bounds.lambda_max);
    EXPECT_LE(TotalVariation(next.distribution, oracle), 1e-9)
        << "beta=" << beta;
    EXPECT_EQ(next.support, (IndexSet{0, 1, 3, 4, 7}));
  }
}

TEST(PrivateStepTest, MatchesBruteForceOracleOnRandomInstances) {
  Rng rng(77);
  MechanismParams params;
  params.top_k = 5;
  params.alpha = 3;
  params.bisection.abs_tolerance = 1e-14;
  params.bisection.max_iterations = 200;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> zero(8);
    std::vector<std::vector<double>> ones(2, std::vector<double>(8));
    for (double& v : zero) v = 2 * rng.NextGaussian();
    for (auto& one : ones) {
      for (double& v : one) v = 2 * rng.NextGaussian();
    }
    params.beta = 0.5 * rng.NextUniform() + 1e-3;
    const std::vector<LogitVector> one_shots = {L(ones[0]), L(ones[1])};
    ASSERT_OK_AND_ASSIGN(
        const PrivateNextToken next,
        PrivateNextTokenDistribution(L(zero), one_shots, params));
    EXPECT_LE(TotalVariation(next.distribution,
                             OracleStep(zero, ones, 5, params.beta, 3, 1.5)),
              1e-9)
        << "trial " << trial;
  }
}

TEST(PrivateStepTest, LambdaZeroPathIsTruncatedZeroShot) {
  // A budget far below any nonzero mixing weight pins every lambda to 0.
  const LogitVector zero = L({1.0, 0.2, -0.5, 2.0, 0.7, -1.5, 0.0, 1.4});
  const std::vector<LogitVector> one = {
      L({-0.3, 2.5, 0.1, 1.0, -1.0, 0.4, 3.0, 0.2})};
  MechanismParams params;
  params.top_k = 5;
  params.beta = 1e-30;
  ASSERT_OK_AND_ASSIGN(const PrivateNextToken next,
                       PrivateNextTokenDistribution(zero, one, params));
  EXPECT_EQ(next.lambdas, std::vector<double>{0.0});
  const LogProbDist truncated =
      *LogSoftmax(*TruncateToSupport(zero, *TopKIndices(zero, 5)));
  EXPECT_LE(TotalVariation(next.distribution, truncated), 1e-9);
}

TEST(PrivateStepTest, ProductOfIdenticalFactorsSharpensZeroShot) {
  // With several shots and no demonstration influence the product is the
  // truncated zero-shot distribution raised to the n-th power.
  const LogitVector zero = L({1.0, 0.2, -0.5, 2.0, 0.7, -1.5, 0.0, 1.4});
  const std::vector<LogitVector> ones(3, zero);
  MechanismParams params;
  params.top_k = 5;
  params.beta = 0.1;
  ASSERT_OK_AND_ASSIGN(const PrivateNextToken next,
                       PrivateNextTokenDistribution(zero, ones, params));
  EXPECT_THAT(next.lambdas, ::testing::Each(1.5));
  std::vector<double> cubed(8);
  for (int i = 0; i < 8; ++i) cubed[i] = 3 * zero[i];
  const LogProbDist expected =
      *LogSoftmax(*TruncateToSupport(L(cubed), *TopKIndices(zero, 5)));
  EXPECT_LE(TotalVariation(next.distribution, expected), 1e-12);
}

TEST(PrivateStepTest, NullInfluenceGivesMaximalLambdaAndZeroShotSampling) {
  auto lm = Lm(/*gamma=*/0.0);
  auto pool = *DemoPool::Create(MakeDemos(6));
  DecodingConfig config = Config(*lm);
  config.n_shots = 1;
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::vector<TokenId> prefix = {TokenId{t % 16}};
    ASSERT_OK_AND_ASSIGN(const auto subset, Subsample(pool, 1, rng));
    const LogitVector zero =
        *lm->Logits(ZeroShotContext("q", prefix, config.template_id));
    const std::vector<LogitVector> one = {*lm->Logits(
        OneShotContext(subset[0], "q", prefix, config.template_id))};
    ASSERT_OK_AND_ASSIGN(
        const PrivateNextToken next,
        PrivateNextTokenDistribution(zero, one, MechanismParamsFrom(config)));
    EXPECT_EQ(next.lambdas, std::vector<double>{1.5});
    const LogProbDist truncated =
        *LogSoftmax(*TruncateToSupport(zero, *TopKIndices(zero, config.top_k)));
    EXPECT_LE(TotalVariation(next.distribution, truncated), 1e-9);
  }
}

TEST(PrivateStepTest, SlackBudgetWithUnitCapIsEnsembleDecoding) {
  auto lm = Lm(/*gamma=*/1.5);
  const auto demos = MakeDemos(3);
  const std::vector<TokenId> prefix = {TokenId{4}, TokenId{9}};
  const LogitVector zero = *lm->Logits(ZeroShotContext("q", prefix, "generic"));
  std::vector<LogitVector> ones;
  for (const auto& d : demos) {
    ones.push_back(*lm->Logits(OneShotContext(d, "q", prefix, "generic")));
  }
  MechanismParams params;
  params.top_k = 7;
  params.beta = 1e6;
  params.bounds.lambda_max = 1.0;
  ASSERT_OK_AND_ASSIGN(const PrivateNextToken next,
                       PrivateNextTokenDistribution(zero, ones, params));
  EXPECT_THAT(next.lambdas, ::testing::Each(1.0));
  ASSERT_OK_AND_ASSIGN(const LogProbDist ensemble,
                       EnsembleNextTokenDistribution(zero, ones, 7));
  EXPECT_LE(TotalVariation(next.distribution, ensemble), 1e-12);
}

TEST(PrivateStepTest, EveryMixedFactorRespectsItsRadius) {
  auto lm = Lm(/*gamma=*/3.0);
  const auto demos = MakeDemos(4);
  const LogitVector zero = *lm->Logits(ZeroShotContext("q", {}, "generic"));
  MechanismParams params;
  params.top_k = 8;
  params.beta = 0.05;
  params.alpha = 6;
  const IndexSet support = *TopKIndices(zero, 8);
  const LogitVector pub = *TruncateToSupport(zero, support);
  const LogProbDist reference = *LogSoftmax(pub);
  for (const auto& d : demos) {
    const std::vector<LogitVector> one = {
        *lm->Logits(OneShotContext(d, "q", {}, "generic"))};
    ASSERT_OK_AND_ASSIGN(const PrivateNextToken next,
                         PrivateNextTokenDistribution(zero, one, params));
    const LogProbDist mixed =
        *MixLogits(*TruncateToSupport(one[0], support), pub, next.lambdas[0]);
    EXPECT_LE(*SymmetricRenyiDivergence(mixed, reference, 6), 0.05 * 6);
    EXPECT_GE(next.lambdas[0], 0.0);
    EXPECT_LE(next.lambdas[0], 1.5);
  }
}

TEST(EnsembleTest, PermutationInvariant) {
  auto lm = Lm(/*gamma=*/2.0);
  const auto demos = MakeDemos(4);
  const LogitVector zero = *lm->Logits(ZeroShotContext("q", {}, "generic"));
  std::vector<LogitVector> ones;
  for (const auto& d : demos) {
    ones.push_back(*lm->Logits(OneShotContext(d, "q", {}, "generic")));
  }
  const LogProbDist base = *EnsembleNextTokenDistribution(zero, ones, 9);
  std::vector<int> order = {0, 1, 2, 3};
  while (std::next_permutation(order.begin(), order.end())) {
    std::vector<LogitVector> permuted;
    for (int i : order) permuted.push_back(ones[i]);
    EXPECT_LE(
        TotalVariation(*EnsembleNextTokenDistribution(zero, permuted, 9), base),
        1e-12);
  }
}

TEST(EnsembleTest, SingleNullDemoIsTruncatedZeroShot) {
  auto lm = Lm(/*gamma=*/0.0);
  const auto demos = MakeDemos(1);
  const LogitVector zero = *lm->Logits(ZeroShotContext("q", {}, "generic"));
  const std::vector<LogitVector> one = {
      *lm->Logits(OneShotContext(demos[0], "q", {}, "generic"))};
  EXPECT_LE(TotalVariation(
                *EnsembleNextTokenDistribution(zero, one, 5),
                *LogSoftmax(*TruncateToSupport(zero, *TopKIndices(zero, 5)))),
            1e-12);
}

TEST(EnsembleTest, DecodeIsDeterministicAndStaysInSupport) {
  auto lm = Lm(/*gamma=*/1.0);
  const auto demos = MakeDemos(3);
  DecodingConfig config = Config(*lm);
  Rng a(4), b(4);
  ASSERT_OK_AND_ASSIGN(const DecodeResult x,
                       EnsembleDecode(demos, "q", config, *lm, a));
  ASSERT_OK_AND_ASSIGN(const DecodeResult y,
                       EnsembleDecode(demos, "q", config, *lm, b));
  EXPECT_EQ(x.tokens, y.tokens);
  EXPECT_FALSE(EnsembleDecode({}, "q", config, *lm, a).ok());
}

// Reference top-k sampler driven by the same generator as ConcatDecode.
std::vector<TokenId> SampleByHand(LogitProvider& provider,
                                  const std::vector<Demonstration>& demos,
                                  const DecodingConfig& config, Rng& rng) {
  std::vector<TokenId> out;
  for (int t = 0; t < config.t_max; ++t) {
    PromptContext ctx{demos, "q", out, config.template_id};
    const LogitVector logits = *provider.Logits(ctx);
    const LogProbDist dist = *LogSoftmax(
        *TruncateToSupport(logits, *TopKIndices(logits, config.top_k)));
    out.push_back(SampleToken(dist, rng));
    if (out.back() == config.eos_token) break;
  }
  return out;
}

TEST(ConcatTest, EmptyListIsZeroShotAndSingleDemoIsOneShot) {
  auto lm = Lm(/*gamma=*/2.0);
  DecodingConfig config = Config(*lm);
  for (const std::vector<Demonstration>& demos :
       {std::vector<Demonstration>{}, MakeDemos(1), MakeDemos(3)}) {
    Rng a(12), b(12);
    ASSERT_OK_AND_ASSIGN(const DecodeResult r,
                         ConcatDecode(demos, "q", config, *lm, a));
    EXPECT_EQ(r.tokens, SampleByHand(*lm, demos, config, b));
    EXPECT_EQ(r.steps_used, static_cast<int>(r.tokens.size()));
  }
}

TEST(GenerateTest, OneHotEosStopsAfterOneToken) {
  const double inf = ::mozo::testing::Inf();
  std::vector<double> eos_only(8, -inf);
  eos_only[2] = 0.0;
  TableProvider provider(8, TokenId{2},
                         {{"", eos_only}, {"d0", eos_only}, {"d1", eos_only}});
  auto pool = *DemoPool::Create(MakeDemos(2));
  DecodingConfig config = Config(provider);
  Rng rng(1);
  ASSERT_OK_AND_ASSIGN(const GenerationRecord r,
                       DpsMozoGenerate(pool, "q", config, provider, rng));
  EXPECT_EQ(r.tokens, std::vector<TokenId>{TokenId{2}});
  EXPECT_EQ(r.steps_used, 1);
  EXPECT_EQ(r.terminated_by, Termination::kEos);
}

TEST(GenerateTest, EosOutsideTopKRunsToCap) {
  const std::vector<double> zero = {-9, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> one = {9, 7, 6, 5, 4, 3, 2, 1};
  TableProvider provider(8, TokenId{0}, {{"", zero}, {"d0", one}, {"d1", one}});
  auto pool = *DemoPool::Create(MakeDemos(2));
  DecodingConfig config = Config(provider);
  config.beta = 100.0;
  Rng rng(1);
  ASSERT_OK_AND_ASSIGN(const GenerationRecord r,
                       DpsMozoGenerate(pool, "q", config, provider, rng));
  EXPECT_EQ(r.steps_used, config.t_max);
  EXPECT_EQ(r.terminated_by, Termination::kTMax);
  EXPECT_THAT(r.tokens, ::testing::Not(::testing::Contains(TokenId{0})));
}

TEST(GenerateTest, ReproducibleCountedAndContained) {
  auto lm = Lm(/*gamma=*/1.0, 24);
  auto pool = *DemoPool::Create(MakeDemos(12));
  DecodingConfig config = Config(*lm);
  config.n_shots = 4;
  config.t_max = 15;
  AuditingProvider audited(*lm);
  Rng a(config.seed), b(config.seed);
  ASSERT_OK_AND_ASSIGN(const GenerationRecord x,
                       DpsMozoGenerate(pool, "q", config, audited, a));
  EXPECT_EQ(audited.call_count(),
            static_cast<size_t>(x.steps_used * (config.n_shots + 1)));
  ASSERT_OK_AND_ASSIGN(const GenerationRecord y,
                       DpsMozoGenerate(pool, "q", config, *lm, b));
  EXPECT_EQ(x.tokens, y.tokens);
  EXPECT_EQ(x.per_step_min_lambda, y.per_step_min_lambda);
  EXPECT_EQ(x.terminated_by, y.terminated_by);
  ASSERT_EQ(x.per_step_min_lambda.size(), static_cast<size_t>(x.steps_used));
  EXPECT_LE(x.steps_used, config.t_max);
  for (double l : x.per_step_min_lambda) {
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, config.lambda_max);
  }

  // Each step draws inside the zero-shot top-k of that step.
  std::vector<TokenId> prefix;
  for (const TokenId tok : x.tokens) {
    const LogitVector zero =
        *lm->Logits(ZeroShotContext("q", prefix, config.template_id));
    const IndexSet k = *TopKIndices(zero, config.top_k);
    EXPECT_TRUE(std::binary_search(k.begin(), k.end(), tok.value));
    prefix.push_back(tok);
  }
}

TEST(GenerateTest, StepSamplesFromItsDistribution) {
  auto lm = Lm(/*gamma=*/1.0, 8);
  auto pool = *DemoPool::Create(MakeDemos(2));
  DecodingConfig config = Config(*lm);
  config.top_k = 5;
  const std::vector<TokenId> prefix = {TokenId{3}};
  std::vector<LogitVector> ones;
  for (const auto& d : pool.demonstrations()) {
    ones.push_back(*lm->Logits(OneShotContext(d, "q", prefix, "generic")));
  }
  const PrivateNextToken exact = *PrivateNextTokenDistribution(
      *lm->Logits(ZeroShotContext("q", prefix, "generic")), ones,
      MechanismParamsFrom(config));
  Rng rng(8);
  std::vector<int> counts(8, 0);
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    ASSERT_OK_AND_ASSIGN(const StepResult s,
                         DpsMozoStep(pool, "q", prefix, config, *lm, rng));
    ++counts[s.token.value];
    ASSERT_DOUBLE_EQ(s.min_lambda, exact.min_lambda());
  }
  for (int v = 0; v < 8; ++v) {
    EXPECT_NEAR(counts[v] / static_cast<double>(kDraws),
                exact.distribution.prob(v), 0.015)
        << "token " << v;
  }
}

TEST(ConfigTest, Validation) {
  auto lm = Lm(1.0);
  auto pool = *DemoPool::Create(MakeDemos(3));
  Rng rng(0);
  DecodingConfig c = Config(*lm);
  c.top_k = 17;
  EXPECT_THAT(DpsMozoGenerate(pool, "q", c, *lm, rng),
              StatusIs(absl::StatusCode::kInvalidArgument, "top_k"));
  c = Config(*lm);
  c.beta = 0.0;
  EXPECT_THAT(DpsMozoGenerate(pool, "q", c, *lm, rng),
              StatusIs(absl::StatusCode::kInvalidArgument, "beta"));
  c = Config(*lm);
  c.alpha = 1;
  EXPECT_FALSE(DpsMozoGenerate(pool, "q", c, *lm, rng).ok());
  c = Config(*lm);
  c.n_shots = 4;
  EXPECT_THAT(DpsMozoGenerate(pool, "q", c, *lm, rng),
              StatusIs(absl::StatusCode::kInvalidArgument, "n_shots"));
  c = Config(*lm);
  c.t_max = 0;
  EXPECT_FALSE(DpsMozoGenerate(pool, "q", c, *lm, rng).ok());
}

}  // namespace
}  // namespace mozo
