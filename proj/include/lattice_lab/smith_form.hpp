#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <utility>
#include <vector>

#include "lattice_lab/errors.hpp"

namespace lattice_lab {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline std::int64_t checked_mul_sub(std::int64_t a, std::int64_t q, std::int64_t b) {
  std::int64_t prod = 0;
  std::int64_t out = 0;
  if (__builtin_mul_overflow(q, b, &prod) || __builtin_sub_overflow(a, prod, &out)) {
    throw EnumerationLimitError("Smith normal form: int64 overflow");
  }
  return out;
}

}  // namespace detail

/// Invariant factors d_1 | d_2 | ... | d_r of an integer matrix (r = min(rows, cols)),
/// by elementary row and column operations. Zero factors are reported as 0.
inline std::vector<std::int64_t> smith_invariant_factors(IntMatrix a) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  const Eigen::Index r = std::min(rows, cols);
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(r));

  for (Eigen::Index t = 0; t < r; ++t) {
    // Pivot: smallest nonzero |entry| in the trailing block.
    for (;;) {
      Eigen::Index pr = -1, pc = -1;
      std::int64_t best = 0;
      for (Eigen::Index i = t; i < rows; ++i)
        for (Eigen::Index j = t; j < cols; ++j)
          if (a(i, j) != 0 && (best == 0 || std::llabs(a(i, j)) < best)) {
            best = std::llabs(a(i, j));
            pr = i;
            pc = j;
          }
      if (pr < 0) {
        for (Eigen::Index rest = t; rest < r; ++rest) out.push_back(0);
        return out;
      }
      a.row(t).swap(a.row(pr));
      a.col(t).swap(a.col(pc));

      bool clean = true;
      for (Eigen::Index i = t + 1; i < rows; ++i) {
        if (a(i, t) == 0) continue;
        const std::int64_t q = a(i, t) / a(t, t);
        for (Eigen::Index j = t; j < cols; ++j) a(i, j) = detail::checked_mul_sub(a(i, j), q, a(t, j));
        if (a(i, t) != 0) clean = false;
      }
      for (Eigen::Index j = t + 1; j < cols; ++j) {
        if (a(t, j) == 0) continue;
        const std::int64_t q = a(t, j) / a(t, t);
        for (Eigen::Index i = t; i < rows; ++i) a(i, j) = detail::checked_mul_sub(a(i, j), q, a(i, t));
        if (a(t, j) != 0) clean = false;
      }
      if (!clean) continue;

      // Pivot must divide the whole trailing block; otherwise fold an offending row in.
      bool divides = true;
      for (Eigen::Index i = t + 1; i < rows && divides; ++i)
        for (Eigen::Index j = t + 1; j < cols; ++j)
          if (a(i, j) % a(t, t) != 0) {
            for (Eigen::Index c = t; c < cols; ++c) a(t, c) += a(i, c);
            divides = false;
            break;
          }
      if (divides) break;
    }
    out.push_back(std::llabs(a(t, t)));
  }
  return out;
}

}  // namespace lattice_lab
