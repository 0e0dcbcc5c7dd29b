// Copyright 2026 The Crashbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRASHBENCH_DIGEST_HPP_
#define CRASHBENCH_DIGEST_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace crashbench {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Content reference in the form "sha256:<hex>".
inline std::string content_ref(std::string_view data) {
  return "sha256:" + sha256_hex(data);
}

// Stable 64-bit FNV-1a; used to derive simulator streams from string keys.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform [0,1) double derived from (seed, key, index). Pure function, so
// simulator outcomes are replayable without carrying generator state.
inline double keyed_uniform(std::uint64_t seed, std::string_view key,
                            std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a64(key));
  h = splitmix64(h ^ index);
  return double(h >> 11) * 0x1.0p-53;
}

}  // namespace crashbench

#endif  // CRASHBENCH_DIGEST_HPP_
