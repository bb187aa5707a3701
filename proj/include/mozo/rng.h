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

#ifndef MOZO_RNG_H_
#define MOZO_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace mozo {

// Seedable 64-bit generator. All derived draws (uniforms, integers, normals)
// are computed from the raw engine output by the code below, never by the
// standard library distributions, so sequences are identical across
// toolchains.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double NextUniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [0, n). Requires n > 0.
  uint64_t UniformInt(uint64_t n);

  // Standard normal via Box-Muller (no cached second variate).
  double NextGaussian();

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

// Independent stream seed for e.g. the i-th query of a job.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace mozo

#endif  // MOZO_RNG_H_
