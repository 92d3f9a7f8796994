#pragma once

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "apgaps/arith.hpp"

namespace apgaps {

inline constexpr u64 kReductionChunk = 4096;

// Pairwise (tree) sum; the association order depends only on the length.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

// Sums `width` accumulators over i in [0, count). term(i, acc) adds into
// acc[0..width). Each fixed-size chunk is summed serially and chunk totals
// are combined pairwise, so the result does not depend on the thread count.
template <class Term>
std::vector<double> chunked_sums(u64 count, std::size_t width, Term&& term) {
  const u64 chunks = (count + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks) * width, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (i64 c = 0; c < static_cast<i64>(chunks); ++c) {
    double* acc = partial.data() + static_cast<std::size_t>(c) * width;
    const u64 lo = static_cast<u64>(c) * kReductionChunk;
    const u64 hi = std::min(count, lo + kReductionChunk);
    for (u64 i = lo; i < hi; ++i) term(i, acc);
  }
  std::vector<double> out(width, 0.0);
  std::vector<double> column(static_cast<std::size_t>(chunks));
  for (std::size_t w = 0; w < width; ++w) {
    for (u64 c = 0; c < chunks; ++c) column[c] = partial[c * width + w];
    out[w] = pairwise_sum(column);
  }
  return out;
}

}  // namespace apgaps
