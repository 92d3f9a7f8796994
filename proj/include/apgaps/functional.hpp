#pragma once

#include <span>
#include <string>
#include <vector>

#include "apgaps/arith.hpp"
#include "apgaps/modulus.hpp"
#include "apgaps/primes.hpp"
#include "apgaps/tuple_sieve.hpp"

namespace apgaps {

// Parameters shared by the moment sums over N < n <= 2N.
struct GpyConfig {
  u64 N = 0;
  double R = 2.0;
  int ell = 1;
  // Above this N the sums are estimated from uniform samples of n.
  u64 monte_carlo_threshold = 1'000'000;
  u64 monte_carlo_samples = 100'000;
  u64 seed = 20110417;
  bool force_exact = false;
};

// 1/4 - log R / log N.
double epsilon_prime_of(double R, u64 N);
// N^(1/4 - eps').
double R_of(u64 N, double epsilon_prime);
int default_ell(int k);
double default_epsilon_prime(double epsilon, double c_q);

// C(2l, l) (log R)^(k+2l) / (k+2l)!
double predicted_moment2(int k, int ell, double R);
// Q/phi(Q) C(2l, l) (log R)^(k+2l)/(k+2l)!  or  C(2l+2, l+1) (log R)^(k+2l+1)/(k+2l+1)!
double predicted_theta_moment(int k, int ell, double R, double Q_over_phi, bool inside);
// (Q/phi)(|S| - |T|)/log N + 2(2l+1)/(l+1) k/(k+2l+1) (1/4 - eps') - 1
double functional_bracket(int k, int ell, double epsilon_prime, double Q_over_phi, double S_minus_T,
                          double log_N);

struct MomentResult {
  double measured = 0.0;
  double predicted = 0.0;
  double ratio = 0.0;
  double std_error = 0.0;  // zero for exact sums
  bool sampled = false;
};

// (1/N)(phi(Q)/Q)^k sum Lambda_R(n; H, k+l)^2 against its prediction.
MomentResult moment2(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config);

enum class ThetaCase { kOutside, kInside };
std::string to_string(ThetaCase c);

struct ThetaMomentResult : MomentResult {
  u64 h = 0;
  ThetaCase which = ThetaCase::kOutside;
};

// (1/N)(phi(Q)/Q)^k sum theta(Qn + h) Lambda_R(n; H, k+l)^2. Q must fit in 64 bits.
ThetaMomentResult theta_moment(const ModulusPlan& plan, std::span<const u64> shifts, u64 h,
                               const GpyConfig& config);

// Unnormalized sum theta(Qn + h) Lambda_R(n; shifts, j)^2 over N < n <= 2N,
// always exact. `shifts` may be empty.
double theta_weighted_sum(const ModulusPlan& plan, std::span<const u64> shifts, u64 h, u64 N, double R,
                          int j);

struct FunctionalReport {
  u64 N = 0;
  double R = 0.0;
  double epsilon_prime = 0.0;
  int k = 0;
  int ell = 0;
  u64 q = 0;
  u64 a = 0;
  double H = 0.0;
  u64 Q = 0;
  double Q_over_phi = 1.0;
  std::vector<u64> shifts;
  u64 S_count = 0;
  u64 T_count = 0;
  MomentResult moment2;
  std::vector<ThetaMomentResult> theta_moments;  // one per h in S and T
  double theta_S_part = 0.0;  // (1/N)(phi/Q)^k sum_n sum_{h in S} theta Lambda^2
  double theta_T_part = 0.0;
  double log_part = 0.0;      // log(3QN) * moment2 measured
  double L_measured = 0.0;
  double L_std_error = 0.0;
  double L_predicted = 0.0;           // closed form with the bracket
  double L_predicted_detailed = 0.0;  // before |S| - k, log 3QN ~ log N simplification
  double bracket = 0.0;
  bool sampled = false;
};

// Shifts must all be = a mod q and coprime to Q.
FunctionalReport L_functional(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config);

struct FourthMoment {
  double measured = 0.0;      // sum Lambda^4
  double sum_squares = 0.0;   // sum Lambda^2
  double majorant = 0.0;      // N (log N)^(19k + 4l)
  double ratio = 0.0;
  bool cauchy_schwarz = false;  // sum Lambda^4 >= (sum Lambda^2)^2 / N
};

// Always exact; requires R^4 < N.
FourthMoment fourth_moment(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config);

struct BvErrorSum {
  double sum = 0.0;
  double max_term = 0.0;
  u64 terms = 0;
  u64 M = 0;                   // 3QN
  double normalized = 0.0;     // sum / (N log N)
};

inline constexpr u64 kMaxBvModulus = 1'000'000;

// sum over squarefree D <= D_max, (D, Q p0) = 1 of E*(3QN, QD).
BvErrorSum bv_error_sum(const PrimeTable& table, const ModulusPlan& plan, u64 N, u64 D_max);

}  // namespace apgaps
