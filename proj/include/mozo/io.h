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

#ifndef MOZO_IO_H_
#define MOZO_IO_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace mozo {

absl::StatusOr<std::string> ReadFile(const std::string& path);

// Nonempty lines with trailing '\r' stripped.
absl::StatusOr<std::vector<std::string>> ReadLines(const std::string& path);

// Writes to "<path>.tmp" and renames over `path`.
absl::Status WriteFileAtomically(const std::string& path,
                                 const std::string& contents);

}  // namespace mozo

#endif  // MOZO_IO_H_
