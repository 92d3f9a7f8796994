#include "apgaps/primes.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include "apgaps/errors.hpp"

namespace apgaps {

namespace {

u64 isqrt(u64 n) {
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Validates (q, a) and returns a reduced into [0, q).
u64 checked_class(u64 q, i64 a) {
  if (q == 0) throw DomainError("modulus q must be >= 1");
  const u64 r = residue(a, q);
  if (std::gcd(q, r) != 1) {
    throw DomainError("residue " + std::to_string(a) + " is not coprime to " + std::to_string(q));
  }
  return r;
}

void check_range(const PrimeTable& table, u64 x) {
  if (x > table.limit()) {
    throw RangeError("x = " + std::to_string(x) + " exceeds prime table limit " +
                     std::to_string(table.limit()));
  }
}

}  // namespace

PrimeTable::PrimeTable(u64 limit, std::vector<u64> primes)
    : limit_(limit), primes_(std::move(primes)) {
  odd_bits_.assign(limit_ / 128 + 1, 0);
  for (u64 p : primes_) {
    if (p == 2) continue;
    const u64 i = p / 2;
    odd_bits_[i / 64] |= u64{1} << (i % 64);
  }
}

bool PrimeTable::is_prime(u64 n) const {
  check_range(*this, n);
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  const u64 i = n / 2;
  return (odd_bits_[i / 64] >> (i % 64)) & 1;
}

std::size_t PrimeTable::count_upto(u64 x) const {
  return static_cast<std::size_t>(std::upper_bound(primes_.begin(), primes_.end(), x) -
                                  primes_.begin());
}

std::span<const u64> PrimeTable::range(u64 lo, u64 hi) const {
  auto first = std::lower_bound(primes_.begin(), primes_.end(), lo);
  auto last = std::upper_bound(first, primes_.end(), hi);
  return {primes_.data() + (first - primes_.begin()), static_cast<std::size_t>(last - first)};
}

std::size_t estimated_sieve_bytes(u64 limit) {
  const double l = static_cast<double>(std::max<u64>(limit, 16));
  const double prime_count = 1.26 * l / std::log(l);
  return static_cast<std::size_t>(l / 16.0 + 8.0 * prime_count);
}

std::vector<u64> sieve_serial(u64 limit) {
  std::vector<u64> out;
  if (limit < 2) return out;
  std::vector<bool> composite(limit + 1, false);
  for (u64 i = 2; i * i <= limit; ++i) {
    if (composite[i]) continue;
    for (u64 j = i * i; j <= limit; j += i) composite[j] = true;
  }
  for (u64 i = 2; i <= limit; ++i) {
    if (!composite[i]) out.push_back(i);
  }
  return out;
}

PrimeTable sieve(u64 limit, const SieveOptions& options) {
  if (limit < 2) throw DomainError("sieve limit must be >= 2");
  if (estimated_sieve_bytes(limit) > options.memory_budget_bytes) {
    throw ResourceError("sieve up to " + std::to_string(limit) + " needs about " +
                        std::to_string(estimated_sieve_bytes(limit)) +
                        " bytes, over the memory budget");
  }
  const u64 seg = std::max<u64>(64, options.segment_odds / 64 * 64);
  const u64 odd_count = limit / 2 + 1;  // indices i <-> 2i+1, i = 0 .. limit/2
  const u64 root = isqrt(limit);
  const std::vector<u64> base = sieve_serial(root);

  PrimeTable table;
  table.limit_ = limit;
  table.odd_bits_.assign(odd_count / 64 + 1, ~u64{0});

  const i64 segments = static_cast<i64>((odd_count + seg - 1) / seg);
  // Segments cover disjoint word ranges of the bitmap.
#pragma omp parallel for schedule(dynamic)
  for (i64 s = 0; s < segments; ++s) {
    const u64 lo = static_cast<u64>(s) * seg;
    const u64 hi = std::min(lo + seg, odd_count);
    u64* words = table.odd_bits_.data();
    auto clear = [&](u64 i) { words[i / 64] &= ~(u64{1} << (i % 64)); };
    for (u64 p : base) {
      if (p == 2) continue;
      // first odd multiple m >= max(p*p, 2lo+1) with index m/2 in [lo, hi)
      u64 start = std::max(p * p, 2 * lo + 1);
      u64 m = (start + p - 1) / p * p;
      if (m % 2 == 0) m += p;
      for (u64 i = m / 2; i < hi; i += p) clear(i);
    }
  }
  table.odd_bits_[0] &= ~u64{1};  // 1 is not prime
  // Bits past odd_count - 1 must not be read as primes.
  for (u64 i = odd_count; i < table.odd_bits_.size() * 64; ++i) {
    table.odd_bits_[i / 64] &= ~(u64{1} << (i % 64));
  }
  if (2 * (odd_count - 1) + 1 > limit) {
    const u64 i = odd_count - 1;
    table.odd_bits_[i / 64] &= ~(u64{1} << (i % 64));
  }

  table.primes_.reserve(static_cast<std::size_t>(1.26 * limit / std::log(static_cast<double>(limit))) + 8);
  table.primes_.push_back(2);
  for (std::size_t w = 0; w < table.odd_bits_.size(); ++w) {
    u64 bits = table.odd_bits_[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      table.primes_.push_back(2 * (w * 64 + static_cast<u64>(b)) + 1);
      bits &= bits - 1;
    }
  }
  return table;
}

namespace {

void write_u64(std::ofstream& out, u64 v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

bool read_u64(std::ifstream& in, u64& v) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(buf[i]) << (8 * i);
  return true;
}

}  // namespace

void save_prime_cache(const std::filesystem::path& path, const PrimeTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open prime cache for writing: " + path.string());
  write_u64(out, kPrimeCacheMagic);
  write_u64(out, table.limit());
  for (u64 p : table.primes()) write_u64(out, p);
}

std::optional<PrimeTable> load_prime_cache(const std::filesystem::path& path, u64 limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  u64 magic = 0, stored_limit = 0;
  if (!read_u64(in, magic) || magic != kPrimeCacheMagic) return std::nullopt;
  if (!read_u64(in, stored_limit) || stored_limit < limit) return std::nullopt;
  std::vector<u64> primes;
  u64 p;
  while (read_u64(in, p)) {
    if (!primes.empty() && p <= primes.back()) return std::nullopt;
    primes.push_back(p);
  }
  return PrimeTable(stored_limit, std::move(primes));
}

PrimeTable load_or_build(const std::filesystem::path& path, u64 limit, const SieveOptions& options) {
  if (auto cached = load_prime_cache(path, limit)) return std::move(*cached);
  PrimeTable table = sieve(limit, options);
  save_prime_cache(path, table);
  return table;
}

double theta_sum(const PrimeTable& table, u64 x, u64 q, i64 a) {
  const u64 r = checked_class(q, a);
  check_range(table, x);
  double sum = 0.0;
  for (u64 p : table.range(2, x)) {
    if (p % q == r) sum += std::log(static_cast<double>(p));
  }
  return sum;
}

double e_star(const PrimeTable& table, u64 M, u64 q) {
  if (q == 0) throw DomainError("modulus q must be >= 1");
  check_range(table, M);
  if (M == 0) return 0.0;
  const double inv_phi = 1.0 / static_cast<double>(euler_phi(q));
  // theta is a step function in x with jumps only at primes of the class, so
  // per class the extremes of |theta(x) - x/phi| sit at x = 1, p - 1, p, M.
  std::vector<double> theta(q, 0.0);
  std::vector<u64> last(q, 0);
  double worst = 0.0;
  auto consider = [&](double th, u64 x) { worst = std::max(worst, std::abs(th - x * inv_phi)); };
  for (u64 p : table.range(2, M)) {
    const u64 c = p % q;
    if (std::gcd(c, q) != 1) continue;
    if (p - 1 >= 1) consider(theta[c], p - 1);
    theta[c] += std::log(static_cast<double>(p));
    consider(theta[c], p);
  }
  for (u64 c = 0; c < q; ++c) {
    if (std::gcd(c, q) != 1) continue;
    consider(0.0, 1);  // theta(1) = 0 in every class
    consider(theta[c], M);
  }
  return worst;
}

double e_star_dense(const PrimeTable& table, u64 M, u64 q) {
  if (q == 0) throw DomainError("modulus q must be >= 1");
  check_range(table, M);
  const double inv_phi = 1.0 / static_cast<double>(euler_phi(q));
  std::vector<double> theta(q, 0.0);
  double worst = 0.0;
  for (u64 x = 1; x <= M; ++x) {
    if (table.is_prime(x) && std::gcd(x % q, q) == 1) theta[x % q] += std::log(static_cast<double>(x));
    for (u64 c = 0; c < q; ++c) {
      if (std::gcd(c, q) != 1) continue;
      worst = std::max(worst, std::abs(theta[c] - x * inv_phi));
    }
  }
  return worst;
}

double mertens_product(const PrimeTable& table, u64 x, u64 q, i64 a) {
  const u64 r = checked_class(q, a);
  check_range(table, x);
  double log_sum = 0.0;
  for (u64 p : table.range(2, x)) {
    if (p % q == r) log_sum += std::log1p(-1.0 / static_cast<double>(p));
  }
  return std::exp(log_sum);
}

MertensFit fit_mertens_constant(const PrimeTable& table, u64 q, i64 a, std::span<const u64> xs) {
  if (xs.size() < 3) throw DomainError("fit_mertens_constant needs at least 3 sample points");
  if (!std::is_sorted(xs.begin(), xs.end()) ||
      std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
    throw DomainError("sample points must be strictly increasing");
  }
  MertensFit fit;
  fit.q = q;
  fit.a = checked_class(q, a);
  const double exponent = 1.0 / static_cast<double>(euler_phi(q));
  double total = 0.0;
  for (u64 x : xs) {
    if (x < 2) throw DomainError("sample points must be >= 2");
    const double prod = mertens_product(table, x, q, a);
    const double norm = prod * std::pow(std::log(static_cast<double>(x)), exponent);
    fit.sample_points.emplace_back(x, prod);
    fit.normalized.push_back(norm);
    total += norm;
  }
  fit.fitted_constant = total / static_cast<double>(xs.size());
  return fit;
}

u64 residue_class_count(const PrimeTable& table, u64 x, u64 q, i64 a) {
  if (q == 0) throw DomainError("modulus q must be >= 1");
  check_range(table, x);
  const u64 r = residue(a, q);
  u64 count = 0;
  for (u64 p : table.range(2, x)) count += (p % q == r);
  return count;
}

}  // namespace apgaps
