// Copyright 2026 The vtsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vtsim {

// Identity of the generator recorded in dataset manifests.
inline constexpr std::string_view kPrngId = "mt19937_64/u53";

// std::mt19937_64 is fully specified by the standard; uniform doubles are
// built from the top 53 bits so every platform draws the same values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-episode seed. Frozen: changing it requires a format version bump.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint32_t shape_index,
                                    std::uint32_t episode_index) {
  const std::uint64_t key = (static_cast<std::uint64_t>(shape_index) << 32) | episode_index;
  return mix64(global_seed ^ mix64(key));
}

}  // namespace vtsim
