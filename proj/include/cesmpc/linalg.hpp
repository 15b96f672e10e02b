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

// Small dense symmetric eigenproblems, used to certify definiteness.

#pragma once

#include <cesmpc/core.hpp>

#include <cmath>

namespace cesmpc {

struct SymmetricEigen {
  Vec values;   // ascending
  Mat vectors;  // columns, orthonormal
};

inline bool is_symmetric(const Mat& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Accurate to a few ulps of ||M|| for the sizes used here (<= ~40).
inline SymmetricEigen jacobi_eigen(const Mat& m, int max_sweeps = 100) {
  require(m.rows() == m.cols(), "jacobi_eigen: matrix must be square");
  const Index n = m.rows();
  Mat a = 0.5 * (m + m.transpose());
  Mat v = Mat::Identity(n, n);
  const double norm = a.norm();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * norm || off == 0.0) break;

    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- R' A R with R the (p, q) plane rotation
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // selection sort keeps eigenpairs aligned
  Vec values = a.diagonal();
  for (Index i = 0; i < n; ++i) {
    Index best = i;
    for (Index j = i + 1; j < n; ++j)
      if (values(j) < values(best)) best = j;
    if (best != i) {
      std::swap(values(i), values(best));
      v.col(i).swap(v.col(best));
    }
  }
  return {values, v};
}

inline double min_eigenvalue(const Mat& m) {
  return jacobi_eigen(m).values.minCoeff();
}

inline double max_eigenvalue(const Mat& m) {
  return jacobi_eigen(m).values.maxCoeff();
}

/// True iff the smallest eigenvalue of the symmetric matrix exceeds `tol`.
inline bool is_positive_definite(const Mat& m, double tol = 0.0) {
  if (!is_symmetric(m)) {
    throw InvalidArgument("is_positive_definite: matrix is not symmetric");
  }
  return min_eigenvalue(m) > tol;
}

}  // namespace cesmpc
