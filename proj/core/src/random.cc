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

#include "sandbox_dp/random.h"

#include <cmath>
#include <limits>

namespace sandbox_dp {

uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t StableHash(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(uint64_t seed) : seed_(seed), engine_(MixSeed(seed)) {}

double Rng::UniformDouble() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

long double Rng::UniformOpenClosed() {
  // (k + 1) / 2^64 for k uniform on [0, 2^64).
  const uint64_t k = NextU64();
  return (static_cast<long double>(k) + 1.0L) * 0x1.0p-64L;
}

uint64_t Rng::UniformInt(uint64_t n) {
  // Rejection sampling on the largest multiple of n.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

ReportId Rng::NextReportId() {
  const uint64_t high = NextU64();
  const uint64_t low = NextU64();
  return ReportId::FromParts(high, low);
}

Rng Rng::Fork(uint64_t stream) const {
  return Rng(MixSeed(seed_ ^ MixSeed(stream + 0x5851f42d4c957f2dULL)));
}

Rng Rng::Fork(std::string_view label) const { return Fork(StableHash(label)); }

}  // namespace sandbox_dp
