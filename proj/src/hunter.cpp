#include "apgaps/hunter.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "apgaps/errors.hpp"
#include "apgaps/functional.hpp"
#include "apgaps/primes.hpp"
#include "apgaps/tuple_sieve.hpp"

namespace apgaps {

IntervalScan scan_window(u64 lo, u64 hi, u64 q, i64 a) {
  if (q < 1) throw DomainError("q must be >= 1");
  if (hi < lo) throw DomainError("window (lo, hi] needs lo <= hi");
  const u64 ar = residue(a, q);
  IntervalScan s;
  s.lo = lo;
  s.hi = hi;
  u64 prev = 0;
  bool prev_in_class = false;
  for (u64 m = lo + 1; m <= hi && m > lo; ++m) {
    if (!is_prime_u64(m)) continue;
    const bool in_class = m % q == ar;
    (in_class ? s.A_count : s.B_count) += 1;
    if (in_class && prev_in_class && !s.pair) {
      if (next_prime(prev) != m) throw std::logic_error("adjacency check failed");
      s.pair = std::make_pair(prev, m);
      s.gap = m - prev;
    }
    prev = m;
    prev_in_class = in_class;
  }
  return s;
}

IntervalScan scan_interval(const ModulusPlan& plan, u64 n) {
  const auto Q = plan.Q.value();
  if (!Q) throw RangeError("Q does not fit in 64 bits");
  const auto lo = checked_mul(*Q, n);
  const u64 H = static_cast<u64>(std::floor(plan.H));
  if (!lo || *lo > ~u64{0} - H) throw RangeError("Qn + H overflows 64 bits");
  IntervalScan s = scan_window(*lo, *lo + H, plan.q, static_cast<i64>(plan.a));
  s.n = n;
  return s;
}

namespace {

void check_class(u64 q, i64 a) {
  if (q < 1) throw DomainError("q must be >= 1");
  if (std::gcd(residue(a, q), q) != 1) throw DomainError("gcd(q, a) must be 1");
}

PairRecord make_record(u64 p, u64 p1) {
  return {p, p1, p1 - p, static_cast<double>(p1 - p) / std::log(static_cast<double>(p))};
}

// Primes in [lo, hi) using base primes up to sqrt(hi).
std::vector<u64> segment_primes(u64 lo, u64 hi, std::span<const u64> base) {
  std::vector<char> composite(hi - lo, 0);
  for (u64 p : base) {
    if (p * p >= hi) break;
    u64 start = std::max(p * p, (lo + p - 1) / p * p);
    for (u64 m = start; m < hi; m += p) composite[m - lo] = 1;
  }
  std::vector<u64> out;
  for (u64 m = std::max<u64>(lo, 2); m < hi; ++m) {
    if (!composite[m - lo]) out.push_back(m);
  }
  return out;
}

}  // namespace

void hunt(u64 q, i64 a, u64 limit, u64 max_gap, const std::function<void(const PairRecord&)>& emit,
          const HuntOptions& options) {
  check_class(q, a);
  if (limit < 3) return;
  if (options.segment_span < 1 || options.segments_per_batch < 1) throw DomainError("bad hunt options");
  const u64 ar = residue(a, q);
  u64 root = static_cast<u64>(std::sqrt(static_cast<long double>(limit)));
  while ((root + 1) * (root + 1) <= limit) ++root;
  const std::vector<u64> base = root >= 2 ? sieve_serial(root) : std::vector<u64>{};

  const u64 span = options.segment_span;
  const u64 end = limit + 1;
  const u64 segments = (end + span - 1) / span;
  u64 prev = 0;
  std::vector<std::vector<u64>> batch(static_cast<std::size_t>(options.segments_per_batch));
  for (u64 first = 0; first < segments; first += batch.size()) {
    const u64 count = std::min<u64>(batch.size(), segments - first);
#pragma omp parallel for schedule(dynamic)
    for (i64 i = 0; i < static_cast<i64>(count); ++i) {
      const u64 lo = (first + static_cast<u64>(i)) * span;
      batch[static_cast<std::size_t>(i)] = segment_primes(lo, std::min(end, lo + span), base);
    }
    for (u64 i = 0; i < count; ++i) {
      for (u64 p : batch[i]) {
        if (prev != 0 && prev % q == ar && p % q == ar && p - prev <= max_gap) {
          if (next_prime(prev) != p) throw std::logic_error("adjacency check failed");
          emit(make_record(prev, p));
        }
        prev = p;
      }
      batch[i].clear();
    }
  }
}

std::vector<PairRecord> hunt(u64 q, i64 a, u64 limit, u64 max_gap) {
  std::vector<PairRecord> out;
  hunt(q, a, limit, max_gap, [&](const PairRecord& r) { out.push_back(r); });
  return out;
}

std::vector<PairRecord> hunt_serial(u64 q, i64 a, u64 limit, u64 max_gap) {
  check_class(q, a);
  std::vector<PairRecord> out;
  if (limit < 3) return out;
  const u64 ar = residue(a, q);
  const std::vector<u64> primes = sieve_serial(limit);
  for (std::size_t i = 1; i < primes.size(); ++i) {
    const u64 p = primes[i - 1], p1 = primes[i];
    if (p % q == ar && p1 % q == ar && p1 - p <= max_gap) out.push_back(make_record(p, p1));
  }
  return out;
}

GoodCount count_good_n(const ModulusPlan& plan, u64 N, std::span<const u64> shifts, double R, int ell) {
  if (N < 1) throw DomainError("N must be >= 1");
  const auto Q = plan.Q.value();
  if (!Q) throw RangeError("Q does not fit in 64 bits");
  const u64 H = static_cast<u64>(std::floor(plan.H));
  const auto top = checked_mul(*Q, 2 * N);
  if (!top || *top > ~u64{0} - H) throw RangeError("Qn + H overflows 64 bits for n <= 2N");

  GoodCount g;
  g.N = N;
  u64 count = 0, pigeon = 0;
#pragma omp parallel for schedule(dynamic, 256) reduction(+ : count, pigeon)
  for (i64 i = 1; i <= static_cast<i64>(N); ++i) {
    const IntervalScan s = scan_interval(plan, N + static_cast<u64>(i));
    if (s.pair) ++count;
    if (s.pigeonhole()) ++pigeon;
  }
  g.count = count;
  g.pigeonhole_count = pigeon;
  if (shifts.empty()) return g;

  GpyConfig config;
  config.N = N;
  config.R = R;
  config.ell = ell;
  config.force_exact = true;
  const FunctionalReport L = L_functional(plan, shifts, config);
  const FourthMoment f = fourth_moment(plan, shifts, config);
  g.L_measured = L.L_measured;
  g.sum_lambda4 = f.measured;
  if (L.L_measured > 0.0 && f.measured > 0.0) {
    const double Nd = static_cast<double>(N);
    const double scale = std::pow(L.Q_over_phi, static_cast<double>(L.k)) * Nd * L.L_measured;
    const double per_n = plan.H * std::log(3.0 * static_cast<double>(*Q) * Nd);
    g.cs_bound = scale * scale / (per_n * per_n) / f.measured;
  }
  return g;
}

GapStatistics gap_statistics(u64 q, i64 a, u64 limit, int grid_points, std::optional<double> epsilon) {
  if (grid_points < 1) throw DomainError("grid_points must be >= 1");
  GapStatistics st;
  st.q = q;
  st.a = residue(a, q);
  st.limit = limit;
  st.epsilon = epsilon;
  const std::vector<PairRecord> pairs = hunt(q, a, limit, ~u64{0});
  for (const auto& r : pairs) st.histogram[r.gap] += 1;

  const double lo = std::log(10.0);
  const double hi = std::log(static_cast<double>(std::max<u64>(limit, 10)));
  for (int i = 0; i < grid_points; ++i) {
    const double t = grid_points == 1 ? 1.0 : static_cast<double>(i) / (grid_points - 1);
    u64 Y = static_cast<u64>(std::llround(std::exp(lo + t * (hi - lo))));
    if (i == grid_points - 1) Y = std::max<u64>(limit, 10);
    if (!st.Y.empty() && Y <= st.Y.back()) continue;
    st.Y.push_back(Y);
  }
  std::size_t idx = 0;
  u64 total = 0, small = 0;
  for (u64 Y : st.Y) {
    while (idx < pairs.size() && pairs[idx].p_r1 <= Y) {
      ++total;
      if (epsilon && pairs[idx].ratio < *epsilon) ++small;
      ++idx;
    }
    st.cumulative.push_back(total);
    if (epsilon) st.cumulative_small.push_back(small);
  }
  return st;
}

}  // namespace apgaps
