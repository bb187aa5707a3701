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

#ifndef MOZO_HASHING_H_
#define MOZO_HASHING_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace mozo {

// Stable across platforms and runs; used for trace keys and for seeding the
// synthetic providers. Not a cryptographic hash.
uint64_t Fnv1a64(std::string_view bytes);

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t x);

inline uint64_t HashCombine(uint64_t seed, uint64_t value) {
  return Mix64(seed ^
               (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

// 16 lowercase hex digits.
std::string HexDigest(uint64_t value);

}  // namespace mozo

#endif  // MOZO_HASHING_H_
