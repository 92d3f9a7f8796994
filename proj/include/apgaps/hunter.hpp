#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "apgaps/arith.hpp"
#include "apgaps/modulus.hpp"

namespace apgaps {

struct IntervalScan {
  u64 n = 0;
  u64 lo = 0;  // window is (lo, hi]
  u64 hi = 0;
  u64 A_count = 0;  // primes = a mod q in the window
  u64 B_count = 0;  // other primes in the window
  // First adjacent pair of window primes both = a mod q, checked with next_prime.
  std::optional<std::pair<u64, u64>> pair;
  std::optional<u64> gap;

  bool pigeonhole() const { return A_count >= B_count + 2; }
};

// Primes in (lo, hi] by Miller-Rabin, classified against a mod q.
IntervalScan scan_window(u64 lo, u64 hi, u64 q, i64 a);
// Window (Qn, Qn + H]; Q must fit in 64 bits with Qn + H.
IntervalScan scan_interval(const ModulusPlan& plan, u64 n);

struct PairRecord {
  u64 p_r = 0;
  u64 p_r1 = 0;
  u64 gap = 0;
  double ratio = 0.0;  // gap / log p_r
};

struct HuntOptions {
  u64 segment_span = u64{1} << 21;  // integers per sieve segment
  int segments_per_batch = 16;
};

// Consecutive primes p_r < p_{r+1} <= limit, both = a mod q, with gap <=
// max_gap, in increasing order. Segments are sieved in parallel batches and
// merged in order; memory stays O(batch).
void hunt(u64 q, i64 a, u64 limit, u64 max_gap, const std::function<void(const PairRecord&)>& emit,
          const HuntOptions& options = {});
std::vector<PairRecord> hunt(u64 q, i64 a, u64 limit, u64 max_gap);
// Whole-range sieve and a single pass; reference implementation.
std::vector<PairRecord> hunt_serial(u64 q, i64 a, u64 limit, u64 max_gap);

struct GoodCount {
  u64 N = 0;
  u64 count = 0;  // n in (N, 2N] whose window holds a consecutive pair = a mod q
  u64 pigeonhole_count = 0;  // n with |A_n| >= |B_n| + 2
  double L_measured = 0.0;
  double sum_lambda4 = 0.0;
  // N^2 (Q/phi)^(2k) L^2 (H log 3QN)^-2 / sum Lambda^4, when L > 0
  std::optional<double> cs_bound;
};

// Direct count over (N, 2N]. With non-empty shifts the lower bound from the
// functional is computed as well (shifts = a mod q, coprime to Q, R^4 < N).
GoodCount count_good_n(const ModulusPlan& plan, u64 N, std::span<const u64> shifts, double R, int ell);

struct GapStatistics {
  u64 q = 0;
  u64 a = 0;
  u64 limit = 0;
  std::map<u64, u64> histogram;  // gap -> number of pairs
  std::vector<u64> Y;            // geometric grid
  std::vector<u64> cumulative;   // pairs with p_{r+1} <= Y
  std::optional<double> epsilon;
  std::vector<u64> cumulative_small;  // pairs with gap < epsilon log p_r
};

GapStatistics gap_statistics(u64 q, i64 a, u64 limit, int grid_points = 20,
                             std::optional<double> epsilon = std::nullopt);

}  // namespace apgaps
