#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "apgaps/arith.hpp"

namespace apgaps {

struct SieveOptions {
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
  u64 segment_odds = u64{1} << 18;  // odd numbers per segment, multiple of 64
};

// Immutable table of all primes up to `limit`, with an odd-only bitmap for
// O(1) membership. Safe to share across threads once built.
class PrimeTable {
 public:
  PrimeTable() = default;
  PrimeTable(u64 limit, std::vector<u64> primes);

  u64 limit() const { return limit_; }
  std::span<const u64> primes() const { return primes_; }
  std::size_t size() const { return primes_.size(); }

  bool is_prime(u64 n) const;
  // Number of tabulated primes <= x.
  std::size_t count_upto(u64 x) const;
  // Primes in [lo, hi].
  std::span<const u64> range(u64 lo, u64 hi) const;

 private:
  friend PrimeTable sieve(u64, const SieveOptions&);
  u64 limit_ = 0;
  std::vector<u64> primes_;
  std::vector<u64> odd_bits_;  // bit i set <=> 2i+1 prime
};

// Segmented sieve of Eratosthenes, OpenMP-parallel over segments.
PrimeTable sieve(u64 limit, const SieveOptions& options = {});

// Plain unsegmented sieve; reference for tests and benchmarks.
std::vector<u64> sieve_serial(u64 limit);

std::size_t estimated_sieve_bytes(u64 limit);

// Cache file: little-endian u64 words {magic, limit, p_1, p_2, ...}.
inline constexpr u64 kPrimeCacheMagic = 0x31454d4952504741ULL;  // "AGPRIME1"
void save_prime_cache(const std::filesystem::path& path, const PrimeTable& table);
// Empty optional if missing, malformed, or covering less than `limit`.
std::optional<PrimeTable> load_prime_cache(const std::filesystem::path& path, u64 limit);
PrimeTable load_or_build(const std::filesystem::path& path, u64 limit,
                         const SieveOptions& options = {});

// Sum of log p over p <= x, p = a mod q.
double theta_sum(const PrimeTable& table, u64 x, u64 q, i64 a);

// max over integer 1 <= x <= M and residues a coprime to q of
// |theta(x; q, a) - x / phi(q)|.
double e_star(const PrimeTable& table, u64 M, u64 q);
// Same quantity by evaluating every integer x; test and benchmark reference.
double e_star_dense(const PrimeTable& table, u64 M, u64 q);

// prod over p <= x, p = a mod q of (1 - 1/p), accumulated in log space.
double mertens_product(const PrimeTable& table, u64 x, u64 q, i64 a);

struct MertensFit {
  u64 q = 1;
  u64 a = 0;
  std::vector<std::pair<u64, double>> sample_points;  // (x, product)
  std::vector<double> normalized;                      // product * (log x)^(1/phi(q))
  double fitted_constant = 0.0;
};

MertensFit fit_mertens_constant(const PrimeTable& table, u64 q, i64 a, std::span<const u64> xs);

u64 residue_class_count(const PrimeTable& table, u64 x, u64 q, i64 a);

}  // namespace apgaps
