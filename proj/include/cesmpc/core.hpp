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

// Shared vocabulary: Eigen aliases and the exception hierarchy.

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cesmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (dimensions, signs, ranges).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is singular to working precision.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Requested task-space point lies outside the reachable annulus.
class OutOfWorkspaceError : public Error {
 public:
  using Error::Error;
};

/// The plant integrator produced a non-finite state.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// No terminal ingredients could be certified. `violation` is the offending
/// eigenvalue of the certificate that failed.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double violation)
      : Error(what), violation_(violation) {}
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// Configuration text could not be parsed. `line` is 1-based, 0 when the
/// problem is not tied to a single line (e.g. a missing key).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw InvalidArgument(message);
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) {
  return m.allFinite();
}

/// Block-diagonal matrix with `count` copies of `block`.
inline Mat repeat_block_diagonal(const Mat& block, Index count) {
  Mat out = Mat::Zero(block.rows() * count, block.cols() * count);
  for (Index k = 0; k < count; ++k) {
    out.block(k * block.rows(), k * block.cols(), block.rows(), block.cols()) =
        block;
  }
  return out;
}

/// diag(a, b) for square blocks.
inline Mat block_diagonal(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace cesmpc
