#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apgaps/arith.hpp"
#include "apgaps/primes.hpp"

namespace apgaps {

// A modulus carried as its factorization. The Shiu-style moduli have
// thousands of prime factors, so the integer itself is only materialized when
// it fits in 64 bits.
class FactoredModulus {
 public:
  FactoredModulus() = default;
  explicit FactoredModulus(std::vector<PrimePower> factors);
  static FactoredModulus of(u64 n);

  std::span<const PrimePower> factors() const { return factors_; }
  std::span<const u64> primes() const { return primes_; }
  bool divisible_by_prime(u64 p) const;
  bool coprime_to(u64 n) const;
  u64 mod(u64 m) const;
  double log_value() const;
  std::optional<u64> value() const;
  // prod over distinct p | Q of (1 - 1/p)
  double phi_ratio() const;
  FactoredModulus without_prime(u64 p) const;
  FactoredModulus times_prime(u64 p) const;

 private:
  std::vector<PrimePower> factors_;  // sorted by p
  std::vector<u64> primes_;
};

enum class PrimeClause : int {
  kSmallOneModQ = 1,   // p <= log H, p = 1 mod q
  kOffClass = 2,       // p <= H/(log H)^2, p != 1 (and != a) mod q
  kLargeOneModQ = 3,   // t(H) <= p <= H/(log H)^2, p = 1 mod q
  kSmallInClass = 4,   // p <= H/t(H), p = a mod q
};

struct PrimeSetEntry {
  u64 p;
  PrimeClause clause;
};

inline constexpr double kMinShiuH = 5000.0;
// log Q (log H)^2 / H sits near 8 for q = 3 at H in [1e4, 1e6].
inline constexpr double kDefaultPlanC = 16.0;

// exp(log H log log log H / (2 log log H)); H >= 5000.
double t_of_H(double H);

// The prime set P(H), each prime tagged with the first clause admitting it.
std::vector<PrimeSetEntry> build_prime_set(u64 q, i64 a, double H, const PrimeTable& table);

struct ModulusPlan {
  u64 q = 0;
  u64 a = 0;
  double H = 0.0;
  std::optional<double> t_H;
  u64 p0 = 1;
  double c = kDefaultPlanC;
  std::vector<PrimeSetEntry> prime_set;  // empty for explicit moduli
  FactoredModulus Q_tilde;
  FactoredModulus Q;
  double phi_ratio = 1.0;  // phi(Q)/Q
  double log_Q_margin = 0.0;  // log Q * (log H)^2 / H, compared with c
  bool explicit_modulus = false;
};

struct PlanOptions {
  std::optional<u64> p0;
  double c = kDefaultPlanC;
};

// Shiu construction; throws ConstructionError if log Q > c H/(log H)^2 or
// another structural condition fails, DomainError for a bad injected p0.
ModulusPlan build_plan(u64 q, i64 a, double H, const PrimeTable& table, const PlanOptions& options = {});

// Plan around a given modulus Q (q | Q), for desk-scale experiments where Q
// must fit in 64 bits. Structural conditions are reported, not enforced.
ModulusPlan make_explicit_plan(u64 q, i64 a, double H, u64 Q, u64 p0 = 1);

// Human-readable list of violated structural conditions; empty when valid.
std::vector<std::string> plan_violations(const ModulusPlan& plan);

struct ResidueSets {
  std::vector<u64> S;  // h in (0, H], (Q, h) = 1, h = a mod q
  std::vector<u64> T;  // h in (0, H], (Q, h) = 1, h != a mod q
};

// Sieves (0, H] by the modulus' primes, OpenMP-parallel over blocks of h.
ResidueSets residue_sets(const ModulusPlan& plan, bool use_Q_tilde = false);
// gcd against every prime factor for each h; reference implementation.
ResidueSets residue_sets_serial(const ModulusPlan& plan, bool use_Q_tilde = false);

struct ClassBalance {
  double H = 0.0;
  u64 S_count = 0;
  u64 T_count = 0;
  u64 S_tilde_count = 0;
  u64 T_tilde_count = 0;
  double H_over_log_H = 0.0;
  double H_phi_ratio = 0.0;      // H phi(Q)/Q
  double T_ratio = 0.0;          // |T| log H / H
  double S_minus_T_ratio = 0.0;  // (|S| - |T|) Q / (H phi(Q))
  double S_tilde_ratio = 0.0;    // |S~| Q~ / (H phi(Q~))
  bool below_regime = false;     // |S| <= |T|
};

ClassBalance class_balance(const ModulusPlan& plan);

struct SweepResult {
  std::vector<ClassBalance> points;
  std::size_t best = 0;  // index maximizing S_tilde_ratio
};

// Geometric grid of `points` values in [X/(log X)^A, X] (clamped to H >= 5000).
SweepResult class_balance_sweep(u64 q, i64 a, double X, double A, int points, const PrimeTable& table,
                          const PlanOptions& options = {});

struct RankinReport {
  double X = 0.0;
  double sum = 0.0;       // sum over sqrt X < d <= X of (X/d) (d/sqrt X)^(1/3)
  double majorant = 0.0;  // X^(5/6) prod_{p <= log X} (1 - p^(-2/3))^(-1)
  u64 terms = 0;
  std::vector<u64> qualifying_primes;
};

// d ranges over integers composed of primes p <= log X with p = 1 mod q.
RankinReport rankin_bound(const ModulusPlan& plan, double X);

}  // namespace apgaps
