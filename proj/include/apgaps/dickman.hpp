#pragma once

#include <functional>
#include <span>
#include <vector>

#include "apgaps/arith.hpp"
#include "apgaps/primes.hpp"

namespace apgaps {

// Dickman-de Bruijn rho on a uniform grid over [0, u_max].
//
// The grid has `per_unit` points per unit interval so every integer is a grid
// point; rho is only piecewise smooth (C^{k-2} at u = k), so every stencil
// used for interpolation or quadrature stays inside one [k, k+1].
class DickmanTable {
 public:
  double u_max() const { return u_max_; }
  double step() const { return step_; }
  int per_unit() const { return per_unit_; }
  std::span<const double> values() const { return values_; }
  double grid_u(std::size_t i) const { return static_cast<double>(i) * step_; }

  // rho(u) for 0 <= u <= u_max; cubic interpolation inside a unit interval.
  double rho(double u) const;
  // Integral of rho over [0, u] from the composite Simpson table.
  double integral_from_zero(double u) const;
  // max over grid points u in (1, u_max] of |u rho(u) - int_{u-1}^u rho|.
  double max_residual() const { return max_residual_; }

 private:
  friend DickmanTable build_rho(double, double);
  double cumulative(std::size_t i) const;

  double u_max_ = 0.0;
  double step_ = 0.0;
  int per_unit_ = 0;
  std::vector<double> values_;
  std::vector<double> segment_partial_;  // int_{floor}^{u_i}, restarted each unit
  std::vector<double> segment_prefix_;   // int_0^{k}
  double max_residual_ = 0.0;
};

inline constexpr double kDickmanResidualTolerance = 1e-8;
inline constexpr double kDefaultRhoStep = 1.0 / 4096.0;

// Integrates rho'(u) = -rho(u-1)/u unit by unit with a fourth-order
// four-point rule. u_max is rounded up to an integer and 1/step up to an
// integer point count. Throws AccuracyError if the integral-equation residual
// exceeds kDickmanResidualTolerance.
DickmanTable build_rho(double u_max, double step = kDefaultRhoStep);

struct TailIntegral {
  double value = 0.0;        // int_u^{u_max} rho
  double uncertainty = 0.0;  // u_max^{-u_max}, the neglected tail bound
};

TailIntegral rho_tail_integral(const DickmanTable& table, double u);

// Psi(x, y): integers in [1, x] free of prime factors > y. Memoized
// recursion over the largest prime factor. x <= 1e12.
u64 psi_exact(u64 x, u64 y);

struct SmoothCount {
  u64 x = 0;
  u64 y = 0;
  double u = 0.0;
  u64 exact = 0;
  double rho_estimate = 0.0;  // x * rho(u)
  double ratio = 0.0;         // exact / rho_estimate
};

// x = round(y^u).
SmoothCount psi_ratio_report(u64 y, double u, const DickmanTable& table);

// Primes p <= y (from the table) admitted by the predicate.
std::vector<u64> select_primes(const PrimeTable& table, u64 y, const std::function<bool(u64)>& admit);

// prod_{p in P, p <= y} (1 - 1/p) * sum over n <= x composed of primes of P
// (restricted to p <= y) of 1/n.
struct SmoothSum {
  double value = 0.0;
  double product = 1.0;
  u64 terms = 0;
};

inline constexpr u64 kSmoothEnumerationBudget = 50'000'000;

SmoothSum restricted_smooth_sum(u64 x, u64 y, std::span<const u64> primes);

// Weighted sum over x < n <= x_cut, plus a Rankin-type bound on the weighted
// sum over n > x_cut. Throws AccuracyError if the bound exceeds 10% of value.
struct SmoothTail {
  double value = 0.0;
  double truncation_bound = 0.0;
  double rankin_sigma = 0.0;
};

SmoothTail restricted_smooth_tail(u64 x, u64 x_cut, u64 y, std::span<const u64> primes);

// Restriction to a subset of the primes <= y can only shrink the weighted tail
// over n > x. Both sides use prod * sum_{n>x} = 1 - prod * sum_{n<=x}.
struct InclusionCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline constexpr double kInclusionTolerance = 1e-9;

InclusionCheck monotone_inclusion_check(u64 x, u64 y, std::span<const u64> primes);

// |{n <= x : every prime factor of n is 1 mod q}|, counting n = 1.
u64 count_1mod_q_smooth(u64 x, u64 q);

}  // namespace apgaps
