// Brute-force reference implementations. Deliberately naive and independent
// of the library: trial division, direct enumeration, plain loops.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

using u64 = std::uint64_t;

inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

inline std::vector<u64> primes_upto(u64 x) {
  std::vector<u64> out;
  for (u64 n = 2; n <= x; ++n) {
    if (is_prime(n)) out.push_back(n);
  }
  return out;
}

inline u64 largest_prime_factor(u64 n) {
  u64 best = 1;
  for (u64 d = 2; d * d <= n; ++d) {
    while (n % d == 0) {
      best = d;
      n /= d;
    }
  }
  return n > 1 ? n : best;
}

inline bool squarefree(u64 n) {
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % (d * d) == 0) return false;
  }
  return true;
}

inline int mu(u64 n) {
  if (!squarefree(n)) return 0;
  int s = 1;
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      s = -s;
      n /= d;
    }
  }
  if (n > 1) s = -s;
  return s;
}

inline u64 psi(u64 x, u64 y) {
  u64 c = 0;
  for (u64 n = 1; n <= x; ++n) {
    if (largest_prime_factor(n) <= y) ++c;
  }
  return c;
}

inline double theta(u64 x, u64 q, u64 a) {
  double s = 0;
  for (u64 p = 2; p <= x; ++p) {
    if (p % q == a % q && is_prime(p)) s += std::log(static_cast<double>(p));
  }
  return s;
}

// max over 1 <= x <= M and a coprime to q of |theta(x; q, a) - x/phi(q)|.
inline double e_star(u64 M, u64 q) {
  u64 phi = 0;
  for (u64 a = 1; a <= q; ++a) phi += std::gcd(a, q) == 1;
  double best = 0;
  for (u64 a = 0; a < q; ++a) {
    if (std::gcd(a, q) != 1) continue;
    double th = 0;
    for (u64 x = 1; x <= M; ++x) {
      if (x % q == a && is_prime(x)) th += std::log(static_cast<double>(x));
      best = std::max(best, std::abs(th - static_cast<double>(x) / static_cast<double>(phi)));
    }
  }
  return best;
}

// Residues n mod d with prod (Q n + h) = 0 mod d, by scanning n = 0..d-1.
inline std::vector<u64> omega(u64 Q, const std::vector<u64>& shifts, u64 d) {
  std::vector<u64> out;
  for (u64 n = 0; n < d; ++n) {
    u64 prod = 1 % d;
    for (u64 h : shifts) prod = static_cast<u64>((static_cast<unsigned __int128>(prod) * ((Q % d) * (n % d) % d + h % d)) % d);
    if (prod == 0) out.push_back(n);
  }
  return out;
}

inline double factorial(int j) {
  double f = 1;
  for (int i = 2; i <= j; ++i) f *= i;
  return f;
}

// (1/j!) sum over d <= R, d | P(n), (d, Q p0) = 1 of mu(d) (log R/d)^j,
// testing d | P(n) by multiplying the linear forms mod d.
inline double Lambda(u64 Q, const std::vector<u64>& shifts, u64 n, double R, int j, u64 p0 = 1) {
  double s = 0;
  for (u64 d = 1; static_cast<double>(d) <= R; ++d) {
    if (std::gcd(d, Q) != 1 || (p0 > 1 && d % p0 == 0)) continue;
    const int m = mu(d);
    if (m == 0) continue;
    u64 prod = 1 % d;
    for (u64 h : shifts) prod = static_cast<u64>((static_cast<unsigned __int128>(prod) * ((Q * n + h) % d)) % d);
    if (prod != 0) continue;
    s += m * std::pow(std::log(R / static_cast<double>(d)), j);
  }
  return s / factorial(j);
}

// prod over p <= p_max of (1 - nu(p)/p)(1 - 1/p)^(-k), nu by scanning.
inline double singular_series(u64 Q, const std::vector<u64>& shifts, u64 p_max) {
  double log_s = 0;
  const double k = static_cast<double>(shifts.size());
  for (u64 p : primes_upto(p_max)) {
    const double nu = static_cast<double>(omega(Q, shifts, p).size());
    if (nu >= static_cast<double>(p)) return 0.0;
    log_s += std::log1p(-nu / static_cast<double>(p)) - k * std::log1p(-1.0 / static_cast<double>(p));
  }
  return std::exp(log_s);
}

struct Pair {
  u64 p, p1;
};

// Consecutive primes p < p1 <= limit with both = a mod q and p1 - p <= max_gap.
inline std::vector<Pair> pairs(u64 q, u64 a, u64 limit, u64 max_gap) {
  std::vector<Pair> out;
  const auto ps = primes_upto(limit);
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (ps[i - 1] % q == a && ps[i] % q == a && ps[i] - ps[i - 1] <= max_gap) out.push_back({ps[i - 1], ps[i]});
  }
  return out;
}

}  // namespace oracle
