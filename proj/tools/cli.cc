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

#include "cli.h"

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <utility>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "mozo/accountant.h"
#include "mozo/decoder.h"
#include "mozo/io.h"
#include "mozo/pipelines.h"
#include "mozo/provider_spec.h"
#include "mozo/providers.h"
#include "mozo/rng.h"
#include "mozo/status_macros.h"
#include "mozo/trace.h"

namespace mozo::cli {
namespace {

// A failed run: the status plus the exit code it maps to.
struct Failure {
  int code;
  absl::Status status;
};

using Outcome = std::optional<Failure>;

#define CLI_TRY(code, expr)                                \
  do {                                                     \
    absl::Status _st = (expr);                             \
    if (!_st.ok()) return Failure{(code), std::move(_st)}; \
  } while (0)

#define CLI_ASSIGN_IMPL(var, code, lhs, rexpr)                    \
  auto var = (rexpr);                                             \
  if (!var.ok()) return Failure{(code), std::move(var).status()}; \
  lhs = std::move(var).value()

#define CLI_CONCAT_INNER(a, b) a##b
#define CLI_CONCAT(a, b) CLI_CONCAT_INNER(a, b)
#define CLI_ASSIGN(code, lhs, rexpr) \
  CLI_ASSIGN_IMPL(CLI_CONCAT(_cli_or_, __LINE__), code, lhs, rexpr)

template <typename T>
absl::Status Read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return absl::OkStatus();
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", key, "': ", e.what()));
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status ReadOptional(const nlohmann::json& j, const char* key,
                          std::optional<T>& out) {
  if (!j.contains(key)) return absl::OkStatus();
  if (j.at(key).is_null()) {
    out.reset();
    return absl::OkStatus();
  }
  T value{};
  RETURN_IF_ERROR(Read(j, key, value));
  out = value;
  return absl::OkStatus();
}

absl::StatusOr<nlohmann::json> Section(const nlohmann::json& j,
                                       const char* key) {
  if (!j.contains(key)) return nlohmann::json::object();
  if (!j.at(key).is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat("config section '", key, "' must be an object"));
  }
  return j.at(key);
}

std::string JoinPath(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// ---------------------------------------------------------------------------
// Run context shared by the commands.

struct Providers {
  ProviderSpec spec;
  std::unique_ptr<LogitProvider> base;
  std::unique_ptr<TraceWriter> writer;
  std::unique_ptr<RecordingProvider> recorder;
  LogitProvider* logits = nullptr;  // what the run talks to
};

Outcome OpenProviders(const RunConfig& config, Providers& p) {
  nlohmann::json spec_json = config.provider;
  if (config.command == "trace-replay") {
    if (config.trace_path.empty()) {
      return Failure{kExitConfig,
                     absl::InvalidArgumentError("trace replay needs --trace")};
    }
    spec_json = {{"kind", "trace"}, {"path", config.trace_path}};
  }
  CLI_ASSIGN(kExitConfig, p.spec, ParseProviderSpec(spec_json));
  CLI_ASSIGN(kExitProvider, p.base, MakeLogitProvider(p.spec));
  p.logits = p.base.get();
  if (config.command == "trace-record") {
    if (config.trace_path.empty()) {
      return Failure{kExitConfig,
                     absl::InvalidArgumentError("trace record needs --trace")};
    }
    CLI_ASSIGN(kExitProvider, p.writer,
               TraceWriter::Open(config.trace_path, p.base->vocab_size(),
                                 p.base->eos_token()));
    p.recorder = std::make_unique<RecordingProvider>(*p.base, *p.writer);
    p.logits = p.recorder.get();
  }
  return std::nullopt;
}

DecodingConfig DecodingFrom(const RunConfig& config, TokenId eos) {
  DecodingConfig d;
  d.n_shots = config.n_shots;
  d.top_k = config.top_k;
  d.lambda_max = config.lambda_max;
  d.t_max = config.t_max;
  d.eos_token = eos;
  d.seed = config.seed;
  d.template_id = config.template_id;
  return d;
}

Outcome RequireOutputDir(const RunConfig& config) {
  if (config.output_dir.empty()) {
    return Failure{kExitConfig,
                   absl::InvalidArgumentError("--out is required")};
  }
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    return Failure{kExitConfig, absl::InvalidArgumentError(absl::StrCat(
                                    "cannot create output directory ",
                                    config.output_dir, ": ", ec.message()))};
  }
  return std::nullopt;
}

Outcome WriteJson(const std::string& path, const nlohmann::json& j) {
  CLI_TRY(kExitConfig, WriteFileAtomically(path, j.dump(2) + "\n"));
  return std::nullopt;
}

Outcome WriteAnswers(const RunConfig& config,
                     const std::vector<nlohmann::json>& answers) {
  std::string body;
  for (const nlohmann::json& a : answers) body += a.dump() + "\n";
  CLI_TRY(kExitConfig, WriteFileAtomically(
                           JoinPath(config.output_dir, "answers.jsonl"), body));
  return std::nullopt;
}

Outcome WriteMetadata(const RunConfig& config, const ProviderSpec* spec,
                      nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json meta = {{"command", config.command},
                         {"config", ToJson(config)},
                         {"seed", config.seed},
                         {"rng", Rng::kAlgorithm},
                         {"rouge_tokenization", "lowercase-whitespace"}};
  if (spec != nullptr) {
    meta["provider_spec"] = ToJson(*spec);
    meta["provider_spec_hash"] = ProviderSpecHash(*spec);
  }
  for (auto& [k, v] : extra.items()) meta[k] = v;
  return WriteJson(JoinPath(config.output_dir, "run_metadata.json"), meta);
}

Outcome LoadPool(const RunConfig& config, std::vector<Demonstration>& pool) {
  if (config.pool_path.empty()) {
    return Failure{kExitConfig,
                   absl::InvalidArgumentError("--pool is required")};
  }
  CLI_ASSIGN(kExitConfig, pool, LoadDemonstrations(config.pool_path));
  return std::nullopt;
}

Outcome LoadQueryFile(const std::string& path, const char* flag,
                      std::vector<Query>& queries) {
  if (path.empty()) {
    return Failure{kExitConfig, absl::InvalidArgumentError(
                                    absl::StrCat(flag, " is required"))};
  }
  CLI_ASSIGN(kExitConfig, queries, LoadQueries(path));
  return std::nullopt;
}

// Budget failures (exhaustion, infeasibility) map to 3, everything raised
// while decoding to 4.
int DecodeFailureCode(const absl::Status& status) {
  return status.code() == absl::StatusCode::kResourceExhausted ? kExitBudget
                                                               : kExitProvider;
}

absl::StatusOr<AccountingInputs> AccountingFrom(const RunConfig& config,
                                                int64_t pool_size,
                                                int64_t n_test) {
  AccountingInputs in;
  if (pool_size < 1) return absl::InvalidArgumentError("pool is empty");
  if (!(config.epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        "epsilon must be > 0; use --mode zero-shot for the epsilon = 0 "
        "baseline, which needs no accounting");
  }
  in.sampling_rate =
      static_cast<double>(config.n_shots) / static_cast<double>(pool_size);
  in.alpha = config.alpha;
  in.n_test = n_test;
  in.t_max = config.t_max;
  in.epsilon = config.epsilon;
  in.delta = config.delta.value_or(1.0 / static_cast<double>(pool_size));
  RETURN_IF_ERROR(in.Validate());
  return in;
}

// ---------------------------------------------------------------------------
// account

Outcome CmdAccount(const RunConfig& config, std::ostream& out) {
  int64_t pool_size = config.pool_size.value_or(0);
  if (!config.pool_size.has_value()) {
    std::vector<Demonstration> pool;
    if (Outcome f = LoadPool(config, pool)) return f;
    pool_size = static_cast<int64_t>(pool.size());
  }
  int64_t n_test = config.n_test.value_or(0);
  if (!config.n_test.has_value()) {
    std::vector<Query> queries;
    if (Outcome f = LoadQueryFile(config.queries_path, "--queries or --n-test",
                                  queries)) {
      return f;
    }
    n_test = static_cast<int64_t>(queries.size());
  }
  CLI_ASSIGN(kExitConfig, const AccountingInputs inputs,
             AccountingFrom(config, pool_size, n_test));
  CLI_ASSIGN(kExitBudget, const BudgetPlan plan, PlanBudget(inputs));
  out << absl::StrFormat(
      "alpha=%d eps_tilde=%.6f per_step_budget=%.6g beta=%.6g "
      "per_step_rdp=%.6g realized_epsilon=%.6f target_epsilon=%g delta=%.6g\n",
      plan.alpha, plan.rdp_budget, plan.per_step_budget, plan.beta,
      plan.per_step_rdp, plan.realized_epsilon, inputs.epsilon, inputs.delta);
  if (!config.output_dir.empty()) {
    if (Outcome f = RequireOutputDir(config)) return f;
    if (Outcome f =
            WriteJson(JoinPath(config.output_dir, "accounting_report.json"),
                      ToJson(plan))) {
      return f;
    }
    if (Outcome f = WriteMetadata(config, nullptr)) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// decode

Outcome DecodeOnline(const RunConfig& config, Providers& p,
                     const std::vector<Query>& queries,
                     std::vector<nlohmann::json>& answers,
                     nlohmann::json& report, std::string& lambda_tsv) {
  OnlineJob job;
  if (Outcome f = LoadPool(config, job.pool)) return f;
  job.queries = queries;
  job.decoding = DecodingFrom(config, p.logits->eos_token());
  job.parallelism = config.parallelism;
  CLI_ASSIGN(kExitConfig, job.accounting,
             AccountingFrom(
                 config, static_cast<int64_t>(job.pool.size()),
                 config.n_test.value_or(static_cast<int64_t>(queries.size()))));
  // Plan first so that an infeasible budget is reported as such.
  CLI_ASSIGN(kExitBudget, const BudgetPlan plan, PlanBudget(job.accounting));
  (void)plan;
  absl::StatusOr<OnlineResult> result = RunOnline(job, *p.logits);
  if (!result.ok()) {
    return Failure{DecodeFailureCode(result.status()), result.status()};
  }
  std::vector<GenerationRecord> records;
  for (const Answer& a : result->answers) {
    answers.push_back(ToJson(a));
    GenerationRecord r;
    r.per_step_min_lambda = a.per_step_min_lambda;
    r.steps_used = a.steps_used;
    records.push_back(std::move(r));
  }
  report = ToJson(result->report);
  lambda_tsv = LambdaTraceTsv(records);
  return std::nullopt;
}

Outcome DecodeOffline(const RunConfig& config, Providers& p,
                      const std::vector<Query>& queries,
                      std::vector<nlohmann::json>& answers,
                      nlohmann::json& report) {
  OfflineJob job;
  if (Outcome f = LoadPool(config, job.pool)) return f;
  if (Outcome f = LoadQueryFile(config.public_inputs_path, "--public-inputs",
                                job.public_inputs)) {
    return f;
  }
  job.synth_t_max = config.synth_t_max;
  job.decoding = DecodingFrom(config, p.logits->eos_token());
  job.parallelism = config.parallelism;
  if (config.offline_decode == "concat") {
    job.mode = OfflineDecodeMode::kConcat;
  } else if (config.offline_decode != "ensemble") {
    return Failure{kExitConfig,
                   absl::InvalidArgumentError(absl::StrCat(
                       "unknown offline_decode: ", config.offline_decode))};
  }
  RunConfig synth = config;
  synth.t_max = config.synth_t_max;
  CLI_ASSIGN(kExitConfig, job.accounting,
             AccountingFrom(synth, static_cast<int64_t>(job.pool.size()),
                            static_cast<int64_t>(job.public_inputs.size())));
  CLI_ASSIGN(kExitBudget, const BudgetPlan plan, PlanBudget(job.accounting));
  (void)plan;
  absl::StatusOr<OfflineResult> result = RunOffline(job, *p.logits);
  if (!result.ok()) {
    return Failure{DecodeFailureCode(result.status()), result.status()};
  }
  CLI_TRY(kExitConfig, WriteDemonstrations(
                           JoinPath(config.output_dir, "synthetic_demos.jsonl"),
                           result->synthetic.demos));
  for (size_t i = 0; i < queries.size(); ++i) {
    absl::StatusOr<Answer> a = result->answerer->AnswerQuery(queries[i], i);
    if (!a.ok()) return Failure{kExitProvider, a.status()};
    answers.push_back(ToJson(*a));
  }
  report = ToJson(result->report);
  report["synthetic_provenance"] = result->synthetic.provenance;
  report["synthetic_demos"] = result->synthetic.demos.size();
  return std::nullopt;
}

Outcome DecodeNonPrivate(const RunConfig& config, Providers& p,
                         const std::vector<Query>& queries,
                         std::vector<nlohmann::json>& answers) {
  const bool zero_shot = config.mode == "zero-shot";
  std::optional<DemoPool> pool;
  if (!zero_shot) {
    std::vector<Demonstration> demos;
    if (Outcome f = LoadPool(config, demos)) return f;
    CLI_ASSIGN(kExitConfig, pool, DemoPool::Create(std::move(demos)));
  }
  const DecodingConfig decoding = DecodingFrom(config, p.logits->eos_token());
  for (size_t i = 0; i < queries.size(); ++i) {
    Rng rng(DeriveSeed(config.seed, i));
    absl::StatusOr<DecodeResult> decoded;
    if (zero_shot) {
      decoded =
          ConcatDecode({}, queries[i].input_text, decoding, *p.logits, rng);
    } else {
      absl::StatusOr<std::vector<Demonstration>> shots =
          Subsample(*pool, config.n_shots, rng);
      if (!shots.ok()) return Failure{kExitConfig, shots.status()};
      decoded = EnsembleDecode(*shots, queries[i].input_text, decoding,
                               *p.logits, rng);
    }
    if (!decoded.ok()) return Failure{kExitProvider, decoded.status()};
    std::vector<TokenId> tokens = decoded->tokens;
    if (!tokens.empty() && tokens.back() == decoding.eos_token) {
      tokens.pop_back();
    }
    absl::StatusOr<std::string> text = p.logits->Detokenize(tokens);
    if (!text.ok()) return Failure{kExitProvider, text.status()};
    Answer a;
    a.query_id = queries[i].id;
    a.tokens = std::move(decoded->tokens);
    a.text = *std::move(text);
    a.steps_used = decoded->steps_used;
    a.terminated_by = decoded->terminated_by;
    answers.push_back(ToJson(a));
  }
  return std::nullopt;
}

Outcome DecodeEsa(const RunConfig& config, Providers& p,
                  const std::vector<Query>& queries,
                  std::vector<nlohmann::json>& answers, nlohmann::json& echo) {
  std::vector<Demonstration> demos;
  if (Outcome f = LoadPool(config, demos)) return f;
  CLI_ASSIGN(kExitConfig, const DemoPool pool,
             DemoPool::Create(std::move(demos)));
  CLI_ASSIGN(kExitProvider, std::unique_ptr<EmbeddingProvider> embedder,
             MakeEmbeddingProvider(p.spec));
  EsaConfig esa;
  esa.num_subsets = config.esa_num_subsets;
  esa.subset_size = config.esa_subset_size;
  esa.sigma = config.esa_sigma;
  esa.candidate_count = config.esa_candidate_count;
  esa.normalize_embeddings = config.esa_normalize;
  esa.seed = config.seed;
  esa.top_k = config.top_k;
  esa.t_max = config.t_max;
  esa.eos_token = p.logits->eos_token();
  esa.template_id = config.template_id;
  CLI_TRY(kExitConfig, esa.Validate(pool.size()));
  echo = ToJson(esa);
  for (size_t i = 0; i < queries.size(); ++i) {
    Rng rng(DeriveSeed(config.seed, i));
    absl::StatusOr<EsaResult> r =
        EsaAnswer(pool, queries[i].input_text, esa, *p.logits, *embedder, rng);
    if (!r.ok()) return Failure{kExitProvider, r.status()};
    answers.push_back({{"query_id", queries[i].id},
                       {"text", r->text},
                       {"candidate_index", r->candidate_index}});
  }
  return std::nullopt;
}

Outcome CmdDecode(const RunConfig& config, std::ostream& out) {
  static const std::set<std::string> kModes = {"online", "offline", "zero-shot",
                                               "few-shot-nonprivate", "esa"};
  if (!kModes.contains(config.mode)) {
    return Failure{kExitConfig, absl::InvalidArgumentError(absl::StrCat(
                                    "unknown mode: ", config.mode))};
  }
  if (Outcome f = RequireOutputDir(config)) return f;
  std::vector<Query> queries;
  if (Outcome f = LoadQueryFile(config.queries_path, "--queries", queries)) {
    return f;
  }
  Providers p;
  if (Outcome f = OpenProviders(config, p)) return f;

  std::vector<nlohmann::json> answers;
  nlohmann::json report;
  nlohmann::json extra = nlohmann::json::object();
  std::string lambda_tsv;
  Outcome failure;
  if (config.mode == "online") {
    failure = DecodeOnline(config, p, queries, answers, report, lambda_tsv);
  } else if (config.mode == "offline") {
    failure = DecodeOffline(config, p, queries, answers, report);
  } else if (config.mode == "esa") {
    nlohmann::json echo;
    failure = DecodeEsa(config, p, queries, answers, echo);
    extra["esa"] = echo;
  } else {
    failure = DecodeNonPrivate(config, p, queries, answers);
  }
  if (failure) return failure;

  if (Outcome f = WriteAnswers(config, answers)) return f;
  if (!report.is_null()) {
    if (Outcome f = WriteJson(
            JoinPath(config.output_dir, "accounting_report.json"), report)) {
      return f;
    }
  }
  if (!lambda_tsv.empty()) {
    CLI_TRY(kExitConfig,
            WriteFileAtomically(JoinPath(config.output_dir, "lambda_trace.tsv"),
                                lambda_tsv));
  }
  if (p.writer) extra["trace_records"] = p.writer->records();
  if (Outcome f = WriteMetadata(config, &p.spec, extra)) return f;
  out << absl::StrFormat("%s: %d answers written to %s\n", config.mode,
                         answers.size(), config.output_dir);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// mia

Outcome CmdMia(const RunConfig& config, std::ostream& out) {
  if (Outcome f = RequireOutputDir(config)) return f;
  std::vector<Demonstration> pool;
  if (Outcome f = LoadPool(config, pool)) return f;
  Providers p;
  if (Outcome f = OpenProviders(config, p)) return f;
  MiaConfig mia;
  mia.test_pool_size = config.mia_test_pool_size;
  mia.nonmembers_per_attack = config.mia_test_pool_size - 1;
  mia.repetitions = config.mia_repetitions;
  mia.seed = config.seed;
  CLI_TRY(kExitConfig, mia.Validate());

  nlohmann::json extra = nlohmann::json::object();
  MembershipScorer scorer;
  Rng blind_rng(DeriveSeed(config.seed, 0x6d6961));
  if (config.mia_mechanism == "nonprivate") {
    scorer = NonPrivateScorer(*p.logits, config.template_id);
  } else if (config.mia_mechanism == "blind") {
    scorer = [&blind_rng](const Demonstration&,
                          const Demonstration&) -> absl::StatusOr<double> {
      return blind_rng.NextUniform();
    };
  } else if (config.mia_mechanism == "private") {
    // The attacked private set is the single member demonstration, so the
    // sampling rate is 1 and one token step is released per query.
    AccountingInputs in;
    in.sampling_rate = 1.0;
    in.alpha = config.alpha;
    in.n_test = 1;
    in.t_max = 1;
    in.epsilon = config.epsilon;
    in.delta = config.delta.value_or(1.0 / mia.test_pool_size);
    CLI_TRY(kExitConfig, in.Validate());
    CLI_ASSIGN(kExitBudget, const BudgetPlan plan, PlanBudget(in));
    MechanismParams params;
    params.top_k = config.top_k;
    params.beta = plan.beta;
    params.alpha = plan.alpha;
    params.bounds.lambda_max = config.lambda_max;
    scorer = PrivateScorer(*p.logits, config.template_id, params);
    extra["plan"] = ToJson(plan);
  } else {
    return Failure{kExitConfig,
                   absl::InvalidArgumentError(absl::StrCat(
                       "unknown mia mechanism: ", config.mia_mechanism))};
  }
  absl::StatusOr<MiaResult> result = MiaRun(pool, mia, scorer);
  if (!result.ok()) return Failure{kExitProvider, result.status()};
  nlohmann::json report = {{"mechanism", config.mia_mechanism},
                           {"aggregation", "pooled"},
                           {"pooled_auc", result->pooled_auc},
                           {"pooled_mean", result->pooled.mean},
                           {"pooled_std", result->pooled.stddev},
                           {"per_attack_auc", result->per_attack_auc},
                           {"per_attack_mean", result->per_attack.mean},
                           {"per_attack_std", result->per_attack.stddev}};
  for (auto& [k, v] : extra.items()) report[k] = v;
  if (Outcome f =
          WriteJson(JoinPath(config.output_dir, "mia_report.json"), report)) {
    return f;
  }
  std::string tsv = "repetition\tpooled_auc\tper_attack_auc\n";
  for (size_t i = 0; i < result->pooled_auc.size(); ++i) {
    absl::StrAppendFormat(&tsv, "%d\t%.6f\t%.6f\n", i + 1,
                          result->pooled_auc[i], result->per_attack_auc[i]);
  }
  CLI_TRY(kExitConfig,
          WriteFileAtomically(JoinPath(config.output_dir, "mia_auc.tsv"), tsv));
  if (Outcome f = WriteMetadata(config, &p.spec)) return f;
  out << absl::StrFormat("mia %s: AUC %.4f +- %.4f (per-attack %.4f +- %.4f)\n",
                         config.mia_mechanism, result->pooled.mean,
                         result->pooled.stddev, result->per_attack.mean,
                         result->per_attack.stddev);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// eval

Outcome CmdEval(const RunConfig& config, std::ostream& out) {
  if (Outcome f = RequireOutputDir(config)) return f;
  std::vector<Query> references;
  if (Outcome f = LoadQueryFile(config.queries_path, "--queries", references)) {
    return f;
  }
  if (config.answers_path.empty()) {
    return Failure{kExitConfig,
                   absl::InvalidArgumentError("--answers is required")};
  }
  CLI_ASSIGN(kExitConfig, const std::vector<std::string> lines,
             ReadLines(config.answers_path));
  std::map<std::string, std::string> by_id;
  for (const std::string& line : lines) {
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      by_id[j.at("query_id").get<std::string>()] =
          j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      return Failure{kExitConfig, absl::InvalidArgumentError(absl::StrCat(
                                      config.answers_path, ": ", e.what()))};
    }
  }
  std::string tsv = "query_id\trouge_l_f1\n";
  std::vector<double> scores;
  for (const Query& q : references) {
    if (!q.reference.has_value()) {
      return Failure{kExitConfig,
                     absl::InvalidArgumentError(absl::StrCat(
                         "query ", q.id, " has no reference output"))};
    }
    auto it = by_id.find(q.id);
    if (it == by_id.end()) {
      return Failure{kExitConfig, absl::InvalidArgumentError(absl::StrCat(
                                      "no answer for query ", q.id))};
    }
    const double f1 = RougeLF1(it->second, *q.reference);
    scores.push_back(f1);
    absl::StrAppendFormat(&tsv, "%s\t%.6f\n", q.id, f1);
  }
  const MeanStd summary = Summarize(scores);
  CLI_TRY(kExitConfig,
          WriteFileAtomically(JoinPath(config.output_dir, "rouge_l.tsv"), tsv));
  if (Outcome f = WriteJson(JoinPath(config.output_dir, "eval_report.json"),
                            {{"metric", "rouge_l_f1"},
                             {"tokenization", "lowercase-whitespace"},
                             {"n", scores.size()},
                             {"mean", summary.mean},
                             {"std", summary.stddev}})) {
    return f;
  }
  out << absl::StrFormat("ROUGE-L F1: %.4f +- %.4f over %d queries\n",
                         summary.mean, summary.stddev, scores.size());
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Flag plumbing. Every flag writes into a JSON overlay that is applied after
// the config file, so both go through ApplyConfigJson.

template <typename T>
void Flag(CLI::App* app, const std::string& name, nlohmann::json& overlay,
          std::vector<std::string> path, const std::string& help) {
  app->add_option_function<T>(
      name,
      [&overlay, path](const T& v) {
        nlohmann::json* node = &overlay;
        for (const std::string& key : path) node = &(*node)[key];
        *node = v;
      },
      help);
}

struct Flags {
  std::string config_file;
  std::string preset;
  std::string provider;
  nlohmann::json overlay = nlohmann::json::object();
};

void AddCommonFlags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_file, "JSON config file");
  app->add_option("--preset", f.preset, "samsum | e2e | wikilarge");
  app->add_option("--provider", f.provider,
                  "provider spec as inline JSON or @path");
  nlohmann::json& o = f.overlay;
  Flag<uint64_t>(app, "--seed", o, {"seed"}, "master seed");
  Flag<std::string>(app, "--pool", o, {"paths", "pool"},
                    "private demonstrations (JSONL)");
  Flag<std::string>(app, "--queries", o, {"paths", "queries"},
                    "queries (JSONL)");
  Flag<std::string>(app, "--out", o, {"paths", "output_dir"},
                    "output directory");
  Flag<double>(app, "--epsilon", o, {"privacy", "epsilon"}, "target epsilon");
  Flag<double>(app, "--delta", o, {"privacy", "delta"},
               "target delta (default 1/|pool|)");
  Flag<int>(app, "--alpha", o, {"privacy", "alpha"}, "fixed Renyi order");
  Flag<int64_t>(app, "--n-test", o, {"privacy", "n_test"},
                "queries covered by the budget");
  Flag<int>(app, "--n-shots", o, {"decoding", "n_shots"}, "subsample size");
  Flag<int>(app, "--top-k", o, {"decoding", "top_k"}, "truncation size");
  Flag<int>(app, "--t-max", o, {"decoding", "t_max"}, "max new tokens");
  Flag<double>(app, "--lambda-max", o, {"decoding", "lambda_max"},
               "upper bound of the mixing weight");
  Flag<std::string>(app, "--template", o, {"decoding", "template_id"},
                    "prompt template id");
  Flag<int>(app, "--parallelism", o, {"decoding", "parallelism"},
            "concurrent queries");
}

void AddDecodeFlags(CLI::App* app, Flags& f) {
  nlohmann::json& o = f.overlay;
  Flag<std::string>(app, "--mode", o, {"mode"},
                    "online | offline | zero-shot | few-shot-nonprivate | esa");
  Flag<std::string>(app, "--public-inputs", o, {"paths", "public_inputs"},
                    "public inputs for offline synthesis (JSONL)");
  Flag<int>(app, "--synth-t-max", o, {"decoding", "synth_t_max"},
            "max tokens per synthetic output");
  Flag<std::string>(app, "--offline-decode", o, {"decoding", "offline_decode"},
                    "ensemble | concat");
  Flag<double>(app, "--sigma", o, {"esa", "sigma"}, "ESA noise scale");
  Flag<int>(app, "--num-subsets", o, {"esa", "num_subsets"}, "ESA subsets");
  Flag<int>(app, "--subset-size", o, {"esa", "subset_size"},
            "ESA demonstrations per subset");
  Flag<int>(app, "--candidates", o, {"esa", "candidate_count"},
            "ESA zero-shot candidates");
}

absl::StatusOr<nlohmann::json> ParseProviderFlag(const std::string& value) {
  std::string text = value;
  if (!value.empty() && value.front() == '@') {
    ASSIGN_OR_RETURN(text, ReadFile(value.substr(1)));
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("--provider: ", e.what()));
  }
}

absl::StatusOr<RunConfig> ResolveConfig(const std::string& command,
                                        const Flags& flags) {
  nlohmann::json file = nlohmann::json::object();
  if (!flags.config_file.empty()) {
    ASSIGN_OR_RETURN(const std::string text, ReadFile(flags.config_file));
    try {
      file = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat(flags.config_file, ": ", e.what()));
    }
    if (!file.is_object()) {
      return absl::InvalidArgumentError("config file must be a JSON object");
    }
  }
  RunConfig config;
  std::string preset = flags.preset;
  if (preset.empty() && file.contains("preset")) {
    RETURN_IF_ERROR(Read(file, "preset", preset));
  }
  if (!preset.empty()) RETURN_IF_ERROR(ApplyPreset(preset, config));
  RETURN_IF_ERROR(ApplyConfigJson(file, config));
  RETURN_IF_ERROR(ApplyConfigJson(flags.overlay, config));
  if (!flags.provider.empty()) {
    ASSIGN_OR_RETURN(config.provider, ParseProviderFlag(flags.provider));
  }
  config.preset = preset;
  config.command = command;
  return config;
}

}  // namespace

absl::Status ApplyPreset(std::string_view name, RunConfig& config) {
  ASSIGN_OR_RETURN(const TaskPreset preset, FindPreset(name));
  config.preset = preset.name;
  config.t_max = preset.t_max;
  config.synth_t_max = preset.synth_t_max;
  config.top_k = preset.top_k;
  config.n_shots = preset.n_shots;
  config.template_id = preset.template_id;
  return absl::OkStatus();
}

absl::Status ApplyConfigJson(const nlohmann::json& j, RunConfig& config) {
  if (!j.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  static const std::set<std::string> kTopLevel = {
      "preset",   "seed",     "mode", "paths", "privacy",
      "decoding", "provider", "esa",  "mia"};
  for (const auto& [key, value] : j.items()) {
    if (!kTopLevel.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown config key: ", key));
    }
  }
  RETURN_IF_ERROR(Read(j, "seed", config.seed));
  RETURN_IF_ERROR(Read(j, "mode", config.mode));

  ASSIGN_OR_RETURN(const nlohmann::json paths, Section(j, "paths"));
  RETURN_IF_ERROR(Read(paths, "pool", config.pool_path));
  RETURN_IF_ERROR(Read(paths, "queries", config.queries_path));
  RETURN_IF_ERROR(Read(paths, "public_inputs", config.public_inputs_path));
  RETURN_IF_ERROR(Read(paths, "output_dir", config.output_dir));
  RETURN_IF_ERROR(Read(paths, "trace", config.trace_path));
  RETURN_IF_ERROR(Read(paths, "answers", config.answers_path));

  ASSIGN_OR_RETURN(const nlohmann::json privacy, Section(j, "privacy"));
  RETURN_IF_ERROR(Read(privacy, "epsilon", config.epsilon));
  RETURN_IF_ERROR(ReadOptional(privacy, "delta", config.delta));
  RETURN_IF_ERROR(ReadOptional(privacy, "alpha", config.alpha));
  RETURN_IF_ERROR(ReadOptional(privacy, "n_test", config.n_test));
  RETURN_IF_ERROR(ReadOptional(privacy, "pool_size", config.pool_size));

  ASSIGN_OR_RETURN(const nlohmann::json decoding, Section(j, "decoding"));
  RETURN_IF_ERROR(Read(decoding, "n_shots", config.n_shots));
  RETURN_IF_ERROR(Read(decoding, "top_k", config.top_k));
  RETURN_IF_ERROR(Read(decoding, "t_max", config.t_max));
  RETURN_IF_ERROR(Read(decoding, "synth_t_max", config.synth_t_max));
  RETURN_IF_ERROR(Read(decoding, "lambda_max", config.lambda_max));
  RETURN_IF_ERROR(Read(decoding, "template_id", config.template_id));
  RETURN_IF_ERROR(Read(decoding, "offline_decode", config.offline_decode));
  RETURN_IF_ERROR(Read(decoding, "parallelism", config.parallelism));

  if (j.contains("provider")) {
    if (!j.at("provider").is_object()) {
      return absl::InvalidArgumentError("provider must be an object");
    }
    config.provider = j.at("provider");
  }

  ASSIGN_OR_RETURN(const nlohmann::json esa, Section(j, "esa"));
  RETURN_IF_ERROR(Read(esa, "num_subsets", config.esa_num_subsets));
  RETURN_IF_ERROR(Read(esa, "subset_size", config.esa_subset_size));
  RETURN_IF_ERROR(Read(esa, "sigma", config.esa_sigma));
  RETURN_IF_ERROR(Read(esa, "candidate_count", config.esa_candidate_count));
  RETURN_IF_ERROR(Read(esa, "normalize_embeddings", config.esa_normalize));

  ASSIGN_OR_RETURN(const nlohmann::json mia, Section(j, "mia"));
  RETURN_IF_ERROR(Read(mia, "test_pool_size", config.mia_test_pool_size));
  RETURN_IF_ERROR(Read(mia, "repetitions", config.mia_repetitions));
  RETURN_IF_ERROR(Read(mia, "mechanism", config.mia_mechanism));
  return absl::OkStatus();
}

nlohmann::json ToJson(const RunConfig& c) {
  auto opt = [](const auto& o) -> nlohmann::json {
    if (o.has_value()) return *o;
    return nullptr;
  };
  return {
      {"preset", c.preset},
      {"seed", c.seed},
      {"mode", c.mode},
      {"paths",
       {{"pool", c.pool_path},
        {"queries", c.queries_path},
        {"public_inputs", c.public_inputs_path},
        {"output_dir", c.output_dir},
        {"trace", c.trace_path},
        {"answers", c.answers_path}}},
      {"privacy",
       {{"epsilon", c.epsilon},
        {"delta", opt(c.delta)},
        {"alpha", opt(c.alpha)},
        {"n_test", opt(c.n_test)},
        {"pool_size", opt(c.pool_size)}}},
      {"decoding",
       {{"n_shots", c.n_shots},
        {"top_k", c.top_k},
        {"t_max", c.t_max},
        {"synth_t_max", c.synth_t_max},
        {"lambda_max", c.lambda_max},
        {"template_id", c.template_id},
        {"offline_decode", c.offline_decode},
        {"parallelism", c.parallelism}}},
      {"provider", c.provider},
      {"esa",
       {{"num_subsets", c.esa_num_subsets},
        {"subset_size", c.esa_subset_size},
        {"sigma", c.esa_sigma},
        {"candidate_count", c.esa_candidate_count},
        {"normalize_embeddings", c.esa_normalize}}},
      {"mia",
       {{"test_pool_size", c.mia_test_pool_size},
        {"repetitions", c.mia_repetitions},
        {"mechanism", c.mia_mechanism}}},
  };
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Private in-context decoding toolkit"};
  app.require_subcommand(1);
  Flags flags;

  CLI::App* account = app.add_subcommand("account", "plan a privacy budget");
  AddCommonFlags(account, flags);
  Flag<int64_t>(account, "--pool-size", flags.overlay, {"privacy", "pool_size"},
                "|pool| without reading the file");

  CLI::App* decode = app.add_subcommand("decode", "answer queries");
  AddCommonFlags(decode, flags);
  AddDecodeFlags(decode, flags);

  CLI::App* mia = app.add_subcommand("mia", "membership inference attack");
  AddCommonFlags(mia, flags);
  Flag<std::string>(mia, "--mechanism", flags.overlay, {"mia", "mechanism"},
                    "nonprivate | private | blind");
  Flag<int>(mia, "--test-pool-size", flags.overlay, {"mia", "test_pool_size"},
            "examples per repetition");
  Flag<int>(mia, "--repetitions", flags.overlay, {"mia", "repetitions"},
            "repetitions");

  CLI::App* trace = app.add_subcommand("trace", "record or replay logits");
  trace->require_subcommand(1);
  CLI::App* record = trace->add_subcommand("record", "decode and record");
  CLI::App* replay = trace->add_subcommand("replay", "decode from a trace");
  for (CLI::App* sub : {record, replay}) {
    AddCommonFlags(sub, flags);
    AddDecodeFlags(sub, flags);
    Flag<std::string>(sub, "--trace", flags.overlay, {"paths", "trace"},
                      "trace file");
  }

  CLI::App* eval = app.add_subcommand("eval", "ROUGE-L report for answers");
  AddCommonFlags(eval, flags);
  Flag<std::string>(eval, "--answers", flags.overlay, {"paths", "answers"},
                    "answers.jsonl to score");

  std::vector<const char*> argv = {"mozo"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command;
  if (account->parsed()) command = "account";
  if (decode->parsed()) command = "decode";
  if (mia->parsed()) command = "mia";
  if (record->parsed()) command = "trace-record";
  if (replay->parsed()) command = "trace-replay";
  if (eval->parsed()) command = "eval";

  absl::StatusOr<RunConfig> config = ResolveConfig(command, flags);
  if (!config.ok()) {
    err << "config error: " << config.status().message() << "\n";
    return kExitConfig;
  }
  Outcome failure;
  if (command == "account") {
    failure = CmdAccount(*config, out);
  } else if (command == "mia") {
    failure = CmdMia(*config, out);
  } else if (command == "eval") {
    failure = CmdEval(*config, out);
  } else {
    failure = CmdDecode(*config, out);
  }
  if (failure) {
    err << "error: " << failure->status.message() << "\n";
    return failure->code;
  }
  return kExitOk;
}

}  // namespace mozo::cli
