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

#ifndef MOZO_TOOLS_CLI_H_
#define MOZO_TOOLS_CLI_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "mozo/esa.h"
#include "mozo/evaluation.h"

namespace mozo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitProvider = 4;

// Everything a run needs. The JSON config file mirrors this layout:
//
//   {
//     "preset": "samsum",
//     "seed": 7,
//     "mode": "online",
//     "paths": {"pool": "...", "queries": "...", "public_inputs": "...",
//               "output_dir": "...", "trace": "...", "answers": "..."},
//     "privacy": {"epsilon": 1.0, "delta": 1e-4, "alpha": 14,
//                 "n_test": 100, "pool_size": 1000},
//     "decoding": {"n_shots": 4, "top_k": 100, "t_max": 50,
//                  "synth_t_max": 30, "lambda_max": 1.5,
//                  "template_id": "samsum", "offline_decode": "ensemble",
//                  "parallelism": 1},
//     "provider": {"kind": "synthetic", ...},
//     "esa": {"num_subsets": 100, "subset_size": 4, "sigma": 0.5,
//             "candidate_count": 100, "normalize_embeddings": true},
//     "mia": {"test_pool_size": 51, "repetitions": 5,
//             "mechanism": "nonprivate" | "private" | "blind"}
//   }
//
// Every key is optional. Precedence, lowest first: built-in defaults, the
// preset, the file, command-line flags.
struct RunConfig {
  std::string command;
  std::string mode = "online";
  std::string preset;
  uint64_t seed = 0;

  std::string pool_path;
  std::string queries_path;
  std::string public_inputs_path;
  std::string output_dir;
  std::string trace_path;
  std::string answers_path;

  double epsilon = 1.0;
  std::optional<double> delta;  // 1 / |pool| when unset
  std::optional<int> alpha;
  std::optional<int64_t> n_test;     // number of queries when unset
  std::optional<int64_t> pool_size;  // read from the pool file when unset

  int n_shots = 4;
  int top_k = 100;
  int t_max = 50;
  int synth_t_max = 30;
  double lambda_max = 1.5;
  std::string template_id = "generic";
  std::string offline_decode = "ensemble";
  int parallelism = 1;

  nlohmann::json provider = {{"kind", "synthetic"}};

  int esa_num_subsets = 100;
  int esa_subset_size = 4;
  double esa_sigma = 0.0;
  int esa_candidate_count = 100;
  bool esa_normalize = true;

  int mia_test_pool_size = 51;
  int mia_repetitions = 5;
  std::string mia_mechanism = "nonprivate";
};

// Overlays the keys present in `j` onto `config`.
absl::Status ApplyConfigJson(const nlohmann::json& j, RunConfig& config);
absl::Status ApplyPreset(std::string_view name, RunConfig& config);
nlohmann::json ToJson(const RunConfig& config);

// Entry point shared by the binary and the tests. Returns the exit code.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mozo::cli

#endif  // MOZO_TOOLS_CLI_H_
