// Copyright 2026 The schro Authors
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

// Seed derivation for reproducible, independent random streams.

#include <cstdint>
#include <random>

namespace schro {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `base`: mix64(mix64(base) ^ mix64(index + tag)).
/// Streams for different indices never depend on how many other streams exist.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t tag = 0) noexcept {
  return mix64(mix64(base) ^ mix64(index * 0x100000001b3ULL + tag));
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t base, std::uint64_t index, std::uint64_t tag = 0) {
  return Rng(derive_seed(base, index, tag));
}

}  // namespace schro
