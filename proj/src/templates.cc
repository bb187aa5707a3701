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

#include "mozo/templates.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_replace.h"

namespace mozo {

const std::vector<PromptTemplate>& DefaultTemplates() {
  static const auto* templates = new std::vector<PromptTemplate>{
      {"generic", "", "", "Input:\n{input}\nOutput:\n{output}\n\n",
       "Input:\n{query}\nOutput:\n"},
      {"samsum", "", "",
       "Dialogue:\n{input}\nSummarize the above dialogue: {output}\n\n",
       "Dialogue:\n{query}\nSummarize the above dialogue:"},
      {"e2e", "Please convert the structured data into natural language.\n",
       "Please convert the structured data into natural language.\n",
       "Input:\n{input}\nAnswer: {output}\n\n", "Input:\n{query}\nAnswer:\n"},
      {"wikilarge",
       "Please make the sentences easier to read and understand.\n",
       "Make the input a little simpler.\n",
       "Input:\n{input}\nOutput:\n{output}\n\n", "Input:\n{query}\nAnswer:\n"},
  };
  return *templates;
}

absl::StatusOr<PromptTemplate> FindTemplate(std::string_view id) {
  for (const PromptTemplate& t : DefaultTemplates()) {
    if (t.id == id) return t;
  }
  return absl::NotFoundError(
      absl::StrCat("unknown template id '", std::string(id), "'"));
}

std::string RenderPrompt(const PromptTemplate& tmpl, const PromptContext& ctx) {
  std::string out =
      ctx.zero_shot() ? tmpl.zero_shot_header : tmpl.few_shot_header;
  for (const Demonstration& demo : ctx.demonstrations) {
    out += absl::StrReplaceAll(
        tmpl.demo_block,
        {{"{input}", demo.input_text}, {"{output}", demo.output_text}});
  }
  out += absl::StrReplaceAll(tmpl.query_block, {{"{query}", ctx.query_text}});
  return out;
}

}  // namespace mozo
