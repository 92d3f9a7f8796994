#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "apgaps/arith.hpp"
#include "apgaps/errors.hpp"
#include "oracles.hpp"

using namespace apgaps;

TEST_CASE("miller-rabin agrees with trial division below 2e5") {
  for (u64 n = 0; n < 200000; ++n) REQUIRE(is_prime_u64(n) == oracle::is_prime(n));
}

TEST_CASE("miller-rabin on hard composites and large primes") {
  CHECK_FALSE(is_prime_u64(561));
  CHECK_FALSE(is_prime_u64(3215031751ULL));
  CHECK_FALSE(is_prime_u64(3825123056546413051ULL));
  CHECK(is_prime_u64((1ULL << 61) - 1));
  CHECK(is_prime_u64(18446744073709551557ULL));  // largest 64-bit prime
  CHECK_FALSE(is_prime_u64(18446744073709551557ULL - 2));
  CHECK(next_prime(18446744073709551556ULL) == 18446744073709551557ULL);
}

TEST_CASE("random 40-bit samples match trial division") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const u64 n = (rng() >> 24) | 1;
    REQUIRE(is_prime_u64(n) == oracle::is_prime(n));
  }
}

TEST_CASE("next_prime") {
  CHECK(next_prime(0) == 2);
  CHECK(next_prime(2) == 3);
  CHECK(next_prime(23) == 29);
  CHECK(next_prime(89) == 97);
}

TEST_CASE("modular arithmetic") {
  CHECK(mulmod(~0ULL, ~0ULL, 1000000007ULL) == static_cast<u64>((static_cast<unsigned __int128>(~0ULL) * ~0ULL) % 1000000007ULL));
  CHECK(powmod(2, 10, 1000) == 24);
  CHECK(powmod(3, 0, 7) == 1);
  for (u64 m : {7ULL, 30ULL, 97ULL, 210ULL}) {
    for (u64 a = 1; a < m; ++a) {
      if (std::gcd(a, m) != 1) continue;
      CHECK(mulmod(a, invmod(a, m), m) == 1);
    }
  }
  CHECK_THROWS(invmod(6, 9));
}

TEST_CASE("factorization and multiplicative functions") {
  for (u64 n = 1; n <= 3000; ++n) {
    u64 prod = 1;
    for (const auto& f : factorize(n)) {
      CHECK(oracle::is_prime(f.p));
      for (int i = 0; i < f.e; ++i) prod *= f.p;
    }
    REQUIRE(prod == n);
    u64 phi = 0;
    for (u64 a = 1; a <= n; ++a) phi += std::gcd(a, n) == 1;
    CHECK(euler_phi(n) == phi);
    CHECK(mobius(n) == oracle::mu(n));
    CHECK(is_squarefree(n) == oracle::squarefree(n));
  }
  CHECK(distinct_prime_factors(360) == std::vector<u64>{2, 3, 5});
}

TEST_CASE("checked_mul, residue, binomial") {
  CHECK(checked_mul(1ULL << 32, 1ULL << 31).value() == 1ULL << 63);
  CHECK_FALSE(checked_mul(1ULL << 32, 1ULL << 32).has_value());
  CHECK(residue(-1, 3) == 2);
  CHECK(residue(5, 3) == 2);
  CHECK(binomial(4, 2) == doctest::Approx(6));
  CHECK(binomial(10, 3) == doctest::Approx(120));
  CHECK(std::exp(log_factorial(5)) == doctest::Approx(120));
}
