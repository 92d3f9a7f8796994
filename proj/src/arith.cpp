#include "apgaps/arith.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace apgaps {

u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

u64 invmod(u64 a, u64 m) {
  i64 old_r = static_cast<i64>(a % m), r = static_cast<i64>(m);
  i64 old_s = 1, s = 0;
  while (r != 0) {
    const i64 quot = old_r / r;
    i64 tmp = old_r - quot * r;
    old_r = r;
    r = tmp;
    tmp = old_s - quot * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) throw std::invalid_argument("invmod: not invertible");
  return residue(old_s, m);
}

namespace {

bool strong_probable_prime(u64 n, u64 a, u64 d, int r) {
  u64 x = powmod(a, d, n);
  if (x == 1 || x == n - 1) return true;
  for (int i = 1; i < r; ++i) {
    x = mulmod(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

}  // namespace

bool is_prime_u64(u64 n) {
  static constexpr std::array<u64, 12> kBases = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (n < 2) return false;
  for (u64 p : kBases) {
    if (n % p == 0) return n == p;
  }
  if (n < 41 * 41) return true;
  u64 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : kBases) {
    if (!strong_probable_prime(n, a, d, r)) return false;
  }
  return true;
}

u64 next_prime(u64 n) {
  if (n < 2) return 2;
  u64 c = (n % 2 == 0) ? n + 1 : n + 2;
  while (!is_prime_u64(c)) c += 2;
  return c;
}

std::vector<PrimePower> factorize(u64 n) {
  std::vector<PrimePower> out;
  if (n < 2) return out;
  auto strip = [&](u64 p) {
    if (n % p != 0) return;
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.push_back({p, e});
  };
  strip(2);
  strip(3);
  for (u64 p = 5; p * p <= n; p += 6) {
    strip(p);
    strip(p + 2);
  }
  if (n > 1) out.push_back({n, 1});
  return out;
}

std::vector<u64> distinct_prime_factors(u64 n) {
  std::vector<u64> out;
  for (const auto& pp : factorize(n)) out.push_back(pp.p);
  return out;
}

u64 euler_phi(u64 n) {
  if (n == 0) return 0;
  u64 result = n;
  for (const auto& pp : factorize(n)) result = result / pp.p * (pp.p - 1);
  return result;
}

int mobius(u64 n) {
  int sign = 1;
  for (const auto& pp : factorize(n)) {
    if (pp.e > 1) return 0;
    sign = -sign;
  }
  return sign;
}

bool is_squarefree(u64 n) { return n != 0 && mobius(n) != 0; }

std::optional<u64> checked_mul(u64 a, u64 b) {
  u64 out;
  if (__builtin_mul_overflow(a, b, &out)) return std::nullopt;
  return out;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace apgaps
