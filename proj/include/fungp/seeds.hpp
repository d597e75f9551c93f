/*
 * Copyright 2026 The fungp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>

namespace fungp {

/// Sub-seeds are derived from one top-level seed by fixed offsets so that
/// each random stage (subset selection, restarts, simulation) is reproducible
/// independently of the others.
namespace seeds {
constexpr std::uint64_t kSubsetOfData = 1;
constexpr std::uint64_t kRestarts = 2;
constexpr std::uint64_t kSubsetOfRegressors = 3;
constexpr std::uint64_t kSimulation = 4;

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t offset) {
  return seed * 0x9E3779B97F4A7C15ULL + offset;
}
}  // namespace seeds

}  // namespace fungp
