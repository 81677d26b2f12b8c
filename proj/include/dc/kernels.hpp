#pragma once

#include <cstddef>

namespace dc {

/// y = A x with A row-major (rows x cols). Four independent accumulators keep
/// the FP dependency chain short so the compiler can vectorize; the summation
/// order is fixed, so results do not depend on thread count or call site.
inline void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      a0 += row[c] * x[c];
      a1 += row[c + 1] * x[c + 1];
      a2 += row[c + 2] * x[c + 2];
      a3 += row[c + 3] * x[c + 3];
    }
    double rest = 0.0;
    for (; c < cols; ++c) rest += row[c] * x[c];
    y[r] = ((a0 + a1) + (a2 + a3)) + rest;
  }
}

/// Naive single-accumulator version kept as the reference implementation for
/// kernel tests and the benchmark target.
inline void matvec_reference(const double* a, std::size_t rows, std::size_t cols,
                             const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace dc
