#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace apgaps {

using u64 = std::uint64_t;
using i64 = std::int64_t;

inline u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<unsigned __int128>(a) * b % m);
}

u64 powmod(u64 base, u64 exp, u64 m);

// Inverse of a modulo m; requires gcd(a, m) = 1.
u64 invmod(u64 a, u64 m);

// Deterministic for every 64-bit n (fixed witness set up to 37).
bool is_prime_u64(u64 n);

// Smallest prime strictly greater than n.
u64 next_prime(u64 n);

struct PrimePower {
  u64 p;
  int e;
  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

// Trial division; intended for n up to ~1e12.
std::vector<PrimePower> factorize(u64 n);
std::vector<u64> distinct_prime_factors(u64 n);

u64 euler_phi(u64 n);
int mobius(u64 n);
bool is_squarefree(u64 n);

// a*b when it fits in 64 bits.
std::optional<u64> checked_mul(u64 a, u64 b);

// Reduces a into [0, q).
inline u64 residue(i64 a, u64 q) {
  const i64 r = a % static_cast<i64>(q);
  return static_cast<u64>(r < 0 ? r + static_cast<i64>(q) : r);
}

double log_factorial(int n);
double binomial(int n, int k);

}  // namespace apgaps
