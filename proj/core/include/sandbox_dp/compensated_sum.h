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

#ifndef SANDBOX_DP_COMPENSATED_SUM_H_
#define SANDBOX_DP_COMPENSATED_SUM_H_

#include <cmath>

namespace sandbox_dp {

// Neumaier's variant of Kahan summation.
template <typename T>
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(T initial) : sum_(initial) {}

  void Add(T x) {
    const T t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(T x) {
    Add(x);
    return *this;
  }

  T value() const { return sum_ + compensation_; }

 private:
  T sum_ = 0;
  T compensation_ = 0;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_COMPENSATED_SUM_H_
