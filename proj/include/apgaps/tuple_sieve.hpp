#pragma once

#include <optional>
#include <span>
#include <vector>

#include "apgaps/arith.hpp"
#include "apgaps/modulus.hpp"
#include "apgaps/primes.hpp"

namespace apgaps {

// The tuple of linear forms Q x + h_1, ..., Q x + h_k.
struct TupleSpec {
  FactoredModulus Q;
  std::vector<u64> shifts;
  double H = 0.0;
  std::optional<u64> delta;  // prod_{i<j} |h_i - h_j| when it fits in 64 bits
  bool admissible = false;   // nu(p) < p for every p

  std::size_t k() const { return shifts.size(); }
};

// Shifts must be distinct integers in [1, H].
TupleSpec make_tuple_spec(FactoredModulus Q, std::vector<u64> shifts, double H);

// Truncation level R, power j and the primes excluded from the divisor sum
// (those dividing Q p0).
struct WeightParams {
  double R = 1.0;
  int j = 1;
  std::vector<u64> excluded_primes;  // sorted
};

WeightParams make_weight_params(double R, int j, const FactoredModulus& Q, u64 p0 = 1);

// Residues n mod p with P(n) = 0 mod p, sorted.
std::vector<u64> omega_p(const TupleSpec& spec, u64 p);
int nu_p(const TupleSpec& spec, u64 p);
// CRT combination of omega_p over p | d; d squarefree.
std::vector<u64> omega_d(const TupleSpec& spec, u64 d);

double lambda_R(u64 d, const WeightParams& params);

// (1/j!) sum' over d | P(n), d <= R of mu(d) (log R/d)^j. Divisibility of
// P(n) by each small prime is tested by reducing the product mod p.
double big_lambda(const TupleSpec& spec, u64 n, const WeightParams& params);
// sum over squarefree d <= R with n mod d in Omega(d) of lambda_R(d; j).
double big_lambda_residue(const TupleSpec& spec, u64 n, const WeightParams& params);

inline constexpr u64 kMaxWeightR = 100'000'000;

// Batch evaluator of Lambda_R(n) for many n. Holds Omega(p) for every
// support prime p <= R; immutable after construction.
class WeightKernel {
 public:
  WeightKernel(const TupleSpec& spec, const WeightParams& params);

  double value(u64 n) const;
  // Lambda_R(n) for n in [lo, hi], OpenMP-parallel over n.
  std::vector<double> values(u64 lo, u64 hi) const;
  // Same values computed by big_lambda one n at a time.
  std::vector<double> values_serial(u64 lo, u64 hi) const;

  double log_R() const { return log_R_; }
  int power() const { return params_.j; }

 private:
  struct SupportPrime {
    u64 p;
    double log_p;
    std::vector<char> in_omega;  // indexed by n mod p
  };
  const TupleSpec* spec_;
  WeightParams params_;
  double log_R_;
  double inv_factorial_;
  std::vector<SupportPrime> support_;
};

struct SingularSeries {
  double value = 0.0;
  double log_value = 0.0;
  double remainder_bound = 0.0;  // k^2 / (last prime used)
  u64 exact_through = 0;         // nu(p) computed exactly for p <= this
  u64 last_prime = 0;
  bool admissible = false;
};

// Euler product with exact factors through max(p_cut, H) and the nu(p) = k
// tail summed until the log increment drops below 1e-12.
SingularSeries singular_series(const TupleSpec& spec, const PrimeTable& table, u64 p_cut);

}  // namespace apgaps
