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

#ifndef MOZO_STATUS_MACROS_H_
#define MOZO_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define MOZO_CONCAT_INNER_(a, b) a##b
#define MOZO_CONCAT_(a, b) MOZO_CONCAT_INNER_(a, b)

#define RETURN_IF_ERROR(expr)                    \
  do {                                           \
    ::absl::Status _mozo_status = (expr);        \
    if (!_mozo_status.ok()) return _mozo_status; \
  } while (0)

#define MOZO_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                \
  if (!statusor.ok()) return statusor.status();           \
  lhs = std::move(statusor).value()

#define ASSIGN_OR_RETURN(lhs, rexpr)                                        \
  MOZO_ASSIGN_OR_RETURN_IMPL_(MOZO_CONCAT_(_mozo_statusor_, __LINE__), lhs, \
                              rexpr)

#endif  // MOZO_STATUS_MACROS_H_
