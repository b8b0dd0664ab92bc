// Copyright 2026 The midigap Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace midigap {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a parent seed and a stream id.
/// All randomness in a run descends from one root seed through this.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Inverse-CDF draw from unnormalized non-negative weights. Entries with zero
/// weight are never returned.
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace midigap
