// Copyright 2026 The sandbox-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SANDBOX_DP_RANDOM_H_
#define SANDBOX_DP_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

#include "sandbox_dp/types.h"

namespace sandbox_dp {

// Seeded pseudo-random stream. Only the engine comes from <random>; every
// conversion to doubles or bounded integers is done here so that a seed
// replays the same values on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double UniformDouble();
  // Uniform on (0, 1] with 64 bits of resolution.
  long double UniformOpenClosed();
  // Uniform on [0, n). Requires n > 0.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p) { return UniformDouble() < p; }

  ReportId NextReportId();

  // Independent substream keyed by a label. Forking does not advance this
  // stream, so substreams are stable regardless of draw order.
  Rng Fork(uint64_t stream) const;
  Rng Fork(std::string_view label) const;

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used for seed derivation.
uint64_t MixSeed(uint64_t x);
// FNV-1a, stable across processes (unlike absl::Hash).
uint64_t StableHash(std::string_view bytes);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_RANDOM_H_
