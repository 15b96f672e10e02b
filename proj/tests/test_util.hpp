// Copyright 2026 The cesmpc Authors
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

#include <cesmpc/core.hpp>

#include <gtest/gtest.h>

#include <random>

namespace cesmpc::testing {

inline Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline ::testing::AssertionResult near(const Mat& actual, const Mat& expected,
                                       double tol) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    return ::testing::AssertionFailure()
           << "shape " << actual.rows() << "x" << actual.cols() << " vs "
           << expected.rows() << "x" << expected.cols();
  }
  const double err = (actual - expected).cwiseAbs().maxCoeff();
  if (err <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << "max abs difference " << err << " > " << tol << "\nactual:\n"
         << actual << "\nexpected:\n"
         << expected;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 20260415) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>()(engine_); }
  Vec uniform_vec(Index n, double lo, double hi) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Mat normal_mat(Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cesmpc::testing
