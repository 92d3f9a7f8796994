#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "apgaps/errors.hpp"
#include "apgaps/primes.hpp"
#include "oracles.hpp"

using namespace apgaps;
using doctest::Approx;

namespace {
const PrimeTable& big() {
  static const PrimeTable t = sieve(1'000'000);
  return t;
}
}  // namespace

TEST_CASE("sieve examples") {
  const PrimeTable ten = sieve(10);
  CHECK(std::vector<u64>(ten.primes().begin(), ten.primes().end()) == std::vector<u64>{2, 3, 5, 7});
  CHECK(sieve(2).size() == 1);
  CHECK(big().size() == 78498);
  u64 trial = 0;
  for (u64 n = 2; n <= 1'000'000; ++n) trial += oracle::is_prime(n);
  CHECK(trial == 78498);
  CHECK_THROWS_AS(sieve(1), DomainError);
}

TEST_CASE("segmented sieve matches the plain sieve and trial division at odd sizes") {
  for (u64 limit : {3ULL, 64ULL, 127ULL, 128ULL, 129ULL, 1000ULL, 99991ULL, 262145ULL}) {
    SieveOptions o;
    o.segment_odds = 64;
    const PrimeTable t = sieve(limit, o);
    const auto ref = sieve_serial(limit);
    REQUIRE(std::vector<u64>(t.primes().begin(), t.primes().end()) == ref);
    if (limit <= 1000) REQUIRE(ref == oracle::primes_upto(limit));
  }
}

TEST_CASE("membership agrees with trial division and Miller-Rabin") {
  const PrimeTable t = sieve(20000);
  for (u64 n = 0; n <= 20000; ++n) REQUIRE(t.is_prime(n) == oracle::is_prime(n));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const u64 n = rng() % 1'000'001;
    REQUIRE(big().is_prime(n) == is_prime_u64(n));
  }
  CHECK_THROWS_AS(t.is_prime(20001), RangeError);
}

TEST_CASE("count_upto and range") {
  const PrimeTable t = sieve(100);
  CHECK(t.count_upto(100) == 25);
  CHECK(t.count_upto(1) == 0);
  const auto r = t.range(10, 30);
  CHECK(std::vector<u64>(r.begin(), r.end()) == std::vector<u64>{11, 13, 17, 19, 23, 29});
}

TEST_CASE("memory budget is enforced") {
  SieveOptions o;
  o.memory_budget_bytes = 1024;
  CHECK_THROWS_AS(sieve(10'000'000, o), ResourceError);
}

TEST_CASE("theta_sum examples and errors") {
  const PrimeTable t = sieve(1000);
  CHECK(theta_sum(t, 10, 1, 0) == Approx(5.34711).epsilon(1e-5));
  CHECK(theta_sum(t, 1, 3, 1) == 0.0);
  CHECK(theta_sum(t, 13, 4, 1) == Approx(std::log(5.0) + std::log(13.0)));
  CHECK_THROWS_AS(theta_sum(t, 1001, 1, 0), RangeError);
  CHECK_THROWS_AS(theta_sum(t, 100, 6, 2), DomainError);
}

TEST_CASE("theta over all classes equals theta(x)") {
  const PrimeTable t = sieve(50000);
  for (u64 q : {1ULL, 3ULL, 4ULL, 10ULL, 30ULL}) {
    for (u64 x : {1ULL, 2ULL, 97ULL, 1000ULL, 49999ULL}) {
      double total = 0;
      for (u64 a = 0; a < q; ++a) {
        if (std::gcd(a, q) == 1 || q == 1) {
          total += theta_sum(t, x, q, static_cast<i64>(a));
        } else {
          total += oracle::theta(x, q, a);  // at most one prime, p | q
        }
      }
      CHECK(total == Approx(theta_sum(t, x, 1, 0)).epsilon(1e-9));
      if (x <= 1000) CHECK(theta_sum(t, x, 1, 0) == Approx(oracle::theta(x, 1, 0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("e_star examples against dense scans") {
  const PrimeTable t = sieve(5000);
  CHECK(e_star(t, 10, 1) == Approx(oracle::e_star(10, 1)));
  CHECK(e_star(t, 2, 3) == Approx(oracle::e_star(2, 3)));
  CHECK(e_star(t, 1, 2) == Approx(1.0));
  for (u64 q : {1ULL, 2ULL, 3ULL, 5ULL, 12ULL, 30ULL}) {
    double prev = 0;
    for (u64 M : {1ULL, 2ULL, 3ULL, 17ULL, 100ULL, 731ULL, 2000ULL}) {
      const double v = e_star(t, M, q);
      CHECK(v == Approx(oracle::e_star(M, q)).epsilon(1e-10));
      CHECK(v == Approx(e_star_dense(t, M, q)).epsilon(1e-12));
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("mertens_product examples") {
  const PrimeTable t = sieve(1000);
  CHECK(mertens_product(t, 30, 1, 0) == Approx(0.15795).epsilon(1e-4));
  CHECK(mertens_product(t, 2, 3, 2) == Approx(0.5));
  const double expect = (1 - 1 / 5.0) * (1 - 1 / 13.0) * (1 - 1 / 17.0) * (1 - 1 / 29.0) * (1 - 1 / 37.0) * (1 - 1 / 41.0);
  CHECK(mertens_product(t, 50, 4, 1) == Approx(expect).epsilon(1e-12));
}

TEST_CASE("Mertens theorem at x >= 1e5") {
  const double euler_gamma = 0.57721566490153286;
  for (u64 x : {100000ULL, 300000ULL, 1000000ULL}) {
    const double r = mertens_product(big(), x, 1, 0) * std::exp(euler_gamma) * std::log(static_cast<double>(x));
    CHECK(r >= 0.9);
    CHECK(r <= 1.1);
  }
}

TEST_CASE("fit_mertens_constant") {
  const std::vector<u64> xs{10000, 100000, 1000000};
  const MertensFit f1 = fit_mertens_constant(big(), 1, 0, xs);
  CHECK(f1.fitted_constant == Approx(0.5615).epsilon(0.05));
  const MertensFit f3 = fit_mertens_constant(big(), 3, 2, xs);
  const auto [lo, hi] = std::minmax_element(f3.normalized.begin(), f3.normalized.end());
  CHECK((*hi - *lo) / *lo < 0.10);
  for (const auto& [x, prod] : f3.sample_points) {
    double direct = 1;
    for (u64 p : big().primes()) {
      if (p > x) break;
      if (p % 3 == 2) direct *= 1 - 1.0 / static_cast<double>(p);
    }
    CHECK(prod == Approx(direct).epsilon(1e-12));
  }
  CHECK_THROWS_AS(fit_mertens_constant(big(), 3, 2, std::vector<u64>{100, 1000}), DomainError);
}

TEST_CASE("residue_class_count examples") {
  const PrimeTable t = sieve(100);
  CHECK(residue_class_count(t, 13, 4, 1) == 2);
  CHECK(residue_class_count(t, 1, 5, 2) == 0);
  CHECK(residue_class_count(t, 100, 1, 0) == 25);
}

TEST_CASE("prime cache round trip") {
  const auto path = std::filesystem::temp_directory_path() / "apgaps_test_cache.bin";
  std::filesystem::remove(path);
  CHECK_FALSE(load_prime_cache(path, 100).has_value());
  const PrimeTable built = load_or_build(path, 5000);
  CHECK(std::filesystem::exists(path));
  const auto loaded = load_prime_cache(path, 4000);
  REQUIRE(loaded.has_value());
  CHECK(loaded->size() == built.size());
  CHECK(loaded->is_prime(4999));
  CHECK_FALSE(load_prime_cache(path, 6000).has_value());
  const PrimeTable bigger = load_or_build(path, 6000);
  CHECK(bigger.limit() >= 6000);
  std::filesystem::remove(path);
}
