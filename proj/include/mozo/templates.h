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

#ifndef MOZO_TEMPLATES_H_
#define MOZO_TEMPLATES_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "mozo/providers.h"

namespace mozo {

// Prompt layout for one task. Blocks use {input}, {output} and {query}
// placeholders. Prompts with demonstrations start with `few_shot_header`,
// zero-shot prompts with `zero_shot_header`.
struct PromptTemplate {
  std::string id;
  std::string few_shot_header;
  std::string zero_shot_header;
  std::string demo_block;
  std::string query_block;
};

// Built-in templates: "generic", "samsum", "e2e", "wikilarge".
const std::vector<PromptTemplate>& DefaultTemplates();

absl::StatusOr<PromptTemplate> FindTemplate(std::string_view id);

// Renders the text part of the prompt; prefix tokens are spliced after it by
// the provider.
std::string RenderPrompt(const PromptTemplate& tmpl, const PromptContext& ctx);

}  // namespace mozo

#endif  // MOZO_TEMPLATES_H_
