#include "apgaps/tuple_sieve.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

#include "apgaps/errors.hpp"

namespace apgaps {

TupleSpec make_tuple_spec(FactoredModulus Q, std::vector<u64> shifts, double H) {
  std::set<u64> seen;
  for (u64 h : shifts) {
    if (h < 1 || static_cast<double>(h) > H) throw DomainError("shift " + std::to_string(h) + " outside [1, H]");
    if (!seen.insert(h).second) throw DomainError("shifts must be distinct");
  }
  TupleSpec spec;
  spec.Q = std::move(Q);
  spec.shifts = std::move(shifts);
  spec.H = H;

  u64 delta = 1;
  bool fits = true;
  for (std::size_t i = 0; i < spec.k() && fits; ++i) {
    for (std::size_t j = i + 1; j < spec.k(); ++j) {
      const u64 diff = spec.shifts[i] > spec.shifts[j] ? spec.shifts[i] - spec.shifts[j]
                                                       : spec.shifts[j] - spec.shifts[i];
      auto next = checked_mul(delta, diff);
      if (!next) {
        fits = false;
        break;
      }
      delta = *next;
    }
  }
  if (fits) spec.delta = delta;

  // Only p | Q or p <= k can have nu(p) = p.
  bool ok = true;
  for (u64 p : spec.Q.primes()) ok = ok && nu_p(spec, p) < static_cast<int>(p);
  for (u64 p = 2; p <= spec.k() && ok; p = next_prime(p)) ok = nu_p(spec, p) < static_cast<int>(p);
  spec.admissible = ok;
  return spec;
}

WeightParams make_weight_params(double R, int j, const FactoredModulus& Q, u64 p0) {
  if (!(R > 1.0)) throw DomainError("R must exceed 1");
  if (j < 1) throw DomainError("power j must be >= 1");
  WeightParams params;
  params.R = R;
  params.j = j;
  params.excluded_primes.assign(Q.primes().begin(), Q.primes().end());
  if (p0 != 1 && !Q.divisible_by_prime(p0)) {
    params.excluded_primes.push_back(p0);
    std::sort(params.excluded_primes.begin(), params.excluded_primes.end());
  }
  return params;
}

std::vector<u64> omega_p(const TupleSpec& spec, u64 p) {
  std::vector<u64> out;
  if (spec.Q.divisible_by_prime(p)) {
    // P(n) = h_1 ... h_k mod p for every n
    const bool hit = std::any_of(spec.shifts.begin(), spec.shifts.end(), [&](u64 h) { return h % p == 0; });
    if (hit) {
      for (u64 r = 0; r < p; ++r) out.push_back(r);
    }
    return out;
  }
  const u64 q_inv = invmod(spec.Q.mod(p), p);
  for (u64 h : spec.shifts) out.push_back(mulmod((p - h % p) % p, q_inv, p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int nu_p(const TupleSpec& spec, u64 p) { return static_cast<int>(omega_p(spec, p).size()); }

std::vector<u64> omega_d(const TupleSpec& spec, u64 d) {
  if (d == 0 || !is_squarefree(d)) throw DomainError("omega_d needs squarefree d");
  std::vector<u64> current{0};
  u64 modulus = 1;
  for (u64 p : distinct_prime_factors(d)) {
    const auto roots = omega_p(spec, p);
    std::vector<u64> next;
    next.reserve(current.size() * roots.size());
    // x = c (mod modulus), x = r (mod p)
    const u64 inv = invmod(modulus % p, p);
    for (u64 c : current) {
      for (u64 r : roots) {
        const u64 t = mulmod((r + p - c % p) % p, inv, p);
        next.push_back(c + modulus * t);
      }
    }
    modulus *= p;
    current = std::move(next);
  }
  std::sort(current.begin(), current.end());
  return current;
}

double lambda_R(u64 d, const WeightParams& params) {
  if (d == 0) throw DomainError("lambda_R needs d >= 1");
  if (static_cast<double>(d) > params.R) return 0.0;
  const int mu = mobius(d);
  if (mu == 0) return 0.0;
  for (u64 p : distinct_prime_factors(d)) {
    if (std::binary_search(params.excluded_primes.begin(), params.excluded_primes.end(), p)) return 0.0;
  }
  return mu * std::pow(std::log(params.R / static_cast<double>(d)), params.j) /
         std::exp(log_factorial(params.j));
}

namespace {

void check_R(const WeightParams& params) {
  if (params.R > static_cast<double>(kMaxWeightR)) throw ResourceError("R too large for divisor enumeration");
}

std::vector<u64> small_primes(double R) {
  const u64 top = static_cast<u64>(std::floor(R));
  return top < 2 ? std::vector<u64>{} : sieve_serial(top);
}

bool excluded(const WeightParams& params, u64 p) {
  return std::binary_search(params.excluded_primes.begin(), params.excluded_primes.end(), p);
}

// Sum of mu(d) (log R/d)^j over squarefree d <= R built from `primes`.
double divisor_sum(std::span<const u64> primes, const WeightParams& params) {
  double total = 0.0;
  std::function<void(std::size_t, u64, int)> walk = [&](std::size_t start, u64 d, int sign) {
    total += sign * std::pow(std::log(params.R / static_cast<double>(d)), params.j);
    for (std::size_t i = start; i < primes.size(); ++i) {
      if (static_cast<double>(d) * static_cast<double>(primes[i]) > params.R) break;
      walk(i + 1, d * primes[i], -sign);
    }
  };
  walk(0, 1, 1);
  return total / std::exp(log_factorial(params.j));
}

}  // namespace

double big_lambda(const TupleSpec& spec, u64 n, const WeightParams& params) {
  check_R(params);
  std::vector<u64> dividing;
  for (u64 p : small_primes(params.R)) {
    if (excluded(params, p)) continue;
    const u64 qn = mulmod(spec.Q.mod(p), n % p, p);
    u64 prod = 1;
    for (u64 h : spec.shifts) prod = mulmod(prod, (qn + h % p) % p, p);
    if (prod == 0) dividing.push_back(p);
  }
  return divisor_sum(dividing, params);
}

double big_lambda_residue(const TupleSpec& spec, u64 n, const WeightParams& params) {
  check_R(params);
  std::vector<u64> support;
  for (u64 p : small_primes(params.R)) {
    if (!excluded(params, p) && nu_p(spec, p) > 0) support.push_back(p);
  }
  double total = 0.0;
  std::function<void(std::size_t, u64)> walk = [&](std::size_t start, u64 d) {
    const auto omega = omega_d(spec, d);
    if (std::binary_search(omega.begin(), omega.end(), n % d)) total += lambda_R(d, params);
    for (std::size_t i = start; i < support.size(); ++i) {
      if (static_cast<double>(d) * static_cast<double>(support[i]) > params.R) break;
      walk(i + 1, d * support[i]);
    }
  };
  walk(0, 1);
  return total;
}

WeightKernel::WeightKernel(const TupleSpec& spec, const WeightParams& params)
    : spec_(&spec), params_(params), log_R_(std::log(params.R)),
      inv_factorial_(1.0 / std::exp(log_factorial(params.j))) {
  check_R(params);
  for (u64 p : small_primes(params.R)) {
    if (excluded(params, p)) continue;
    const auto roots = omega_p(spec, p);
    if (roots.empty()) continue;
    SupportPrime sp{p, std::log(static_cast<double>(p)), std::vector<char>(p, 0)};
    for (u64 r : roots) sp.in_omega[r] = 1;
    support_.push_back(std::move(sp));
  }
}

double WeightKernel::value(u64 n) const {
  thread_local std::vector<u64> dividing;
  dividing.clear();
  for (const auto& sp : support_) {
    if (sp.in_omega[n % sp.p]) dividing.push_back(sp.p);
  }
  return divisor_sum(dividing, params_);
}

std::vector<double> WeightKernel::values(u64 lo, u64 hi) const {
  if (hi < lo) return {};
  const i64 count = static_cast<i64>(hi - lo + 1);
  std::vector<double> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (i64 i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = value(lo + static_cast<u64>(i));
  return out;
}

std::vector<double> WeightKernel::values_serial(u64 lo, u64 hi) const {
  std::vector<double> out;
  for (u64 n = lo; n <= hi && hi >= lo; ++n) out.push_back(big_lambda(*spec_, n, params_));
  return out;
}

SingularSeries singular_series(const TupleSpec& spec, const PrimeTable& table, u64 p_cut) {
  SingularSeries out;
  out.admissible = spec.admissible;
  if (!spec.admissible) {
    out.value = 0.0;
    out.log_value = -INFINITY;
    return out;
  }
  const double k = static_cast<double>(spec.k());
  const u64 exact_through = std::max<u64>(p_cut, static_cast<u64>(std::floor(spec.H)));
  if (exact_through > table.limit()) throw RangeError("prime table does not reach max(p_cut, H)");
  out.exact_through = exact_through;

  double log_sum = 0.0;
  for (u64 p : table.range(2, exact_through)) {
    const double pd = static_cast<double>(p);
    log_sum += std::log1p(-nu_p(spec, p) / pd) - k * std::log1p(-1.0 / pd);
    out.last_prime = p;
  }
  // p > H: nu(p) = k unless p | Q (then 0)
  for (u64 p : table.range(exact_through + 1, table.limit())) {
    const double pd = static_cast<double>(p);
    const double nu = spec.Q.divisible_by_prime(p) ? 0.0 : k;
    const double inc = std::log1p(-nu / pd) - k * std::log1p(-1.0 / pd);
    log_sum += inc;
    out.last_prime = p;
    if (std::abs(inc) < 1e-12) break;
  }
  out.remainder_bound = out.last_prime ? k * k / static_cast<double>(out.last_prime) : 0.0;
  out.log_value = log_sum;
  out.value = std::exp(log_sum);
  return out;
}

}  // namespace apgaps
