#include "apgaps/modulus.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "apgaps/errors.hpp"

namespace apgaps {

FactoredModulus::FactoredModulus(std::vector<PrimePower> factors) : factors_(std::move(factors)) {
  std::sort(factors_.begin(), factors_.end(), [](const auto& l, const auto& r) { return l.p < r.p; });
  // merge repeated primes
  std::vector<PrimePower> merged;
  for (const auto& f : factors_) {
    if (f.e <= 0) continue;
    if (!merged.empty() && merged.back().p == f.p) {
      merged.back().e += f.e;
    } else {
      merged.push_back(f);
    }
  }
  factors_ = std::move(merged);
  for (const auto& f : factors_) primes_.push_back(f.p);
}

FactoredModulus FactoredModulus::of(u64 n) {
  if (n == 0) throw DomainError("modulus must be positive");
  return FactoredModulus(factorize(n));
}

bool FactoredModulus::divisible_by_prime(u64 p) const {
  return std::binary_search(primes_.begin(), primes_.end(), p);
}

bool FactoredModulus::coprime_to(u64 n) const {
  if (n == 0) return primes_.empty();
  if (primes_.size() <= 16) {
    for (u64 p : primes_) {
      if (n % p == 0) return false;
    }
    return true;
  }
  for (u64 p : distinct_prime_factors(n)) {
    if (divisible_by_prime(p)) return false;
  }
  return true;
}

u64 FactoredModulus::mod(u64 m) const {
  if (m == 0) throw DomainError("reduction modulo zero");
  u64 r = 1 % m;
  for (const auto& f : factors_) r = mulmod(r, powmod(f.p % m, static_cast<u64>(f.e), m), m);
  return r;
}

double FactoredModulus::log_value() const {
  double s = 0.0;
  for (const auto& f : factors_) s += f.e * std::log(static_cast<double>(f.p));
  return s;
}

std::optional<u64> FactoredModulus::value() const {
  u64 v = 1;
  for (const auto& f : factors_) {
    for (int i = 0; i < f.e; ++i) {
      auto next = checked_mul(v, f.p);
      if (!next) return std::nullopt;
      v = *next;
    }
  }
  return v;
}

double FactoredModulus::phi_ratio() const {
  double log_sum = 0.0;
  for (u64 p : primes_) log_sum += std::log1p(-1.0 / static_cast<double>(p));
  return std::exp(log_sum);
}

FactoredModulus FactoredModulus::without_prime(u64 p) const {
  std::vector<PrimePower> f(factors_.begin(), factors_.end());
  for (auto& pp : f) {
    if (pp.p == p) --pp.e;
  }
  return FactoredModulus(std::move(f));
}

FactoredModulus FactoredModulus::times_prime(u64 p) const {
  std::vector<PrimePower> f(factors_.begin(), factors_.end());
  f.push_back({p, 1});
  return FactoredModulus(std::move(f));
}

double t_of_H(double H) {
  if (!(H >= kMinShiuH)) throw DomainError("t(H) requires H >= 5000");
  const double l1 = std::log(H);
  const double l2 = std::log(l1);
  const double l3 = std::log(l2);
  return std::exp(l1 * l3 / (2.0 * l2));
}

namespace {

u64 checked_residue(u64 q, i64 a) {
  if (q < 3) throw DomainError("the construction needs q >= 3");
  const u64 r = residue(a, q);
  if (std::gcd(q, r) != 1) throw DomainError("(q, a) must be 1");
  return r;
}

}  // namespace

std::vector<PrimeSetEntry> build_prime_set(u64 q, i64 a, double H, const PrimeTable& table) {
  const u64 ar = checked_residue(q, a);
  if (!(H > std::exp(1.0))) throw DomainError("H must exceed e");
  const double log_H = std::log(H);
  const double off_bound = H / (log_H * log_H);
  const bool a_is_one = (ar == 1 % q);
  double t = 0.0, in_class_bound = 0.0;
  if (!a_is_one) {
    t = t_of_H(H);
    in_class_bound = H / t;
  }
  const double top = std::max({log_H, off_bound, in_class_bound});
  if (static_cast<double>(table.limit()) < top) throw RangeError("prime table too small for P(H)");

  std::vector<PrimeSetEntry> out;
  for (u64 p : table.range(2, static_cast<u64>(std::floor(top)))) {
    const double pd = static_cast<double>(p);
    const u64 r = p % q;
    const bool one = (r == 1 % q);
    if (one && pd <= log_H) {
      out.push_back({p, PrimeClause::kSmallOneModQ});
    } else if (!one && (a_is_one || r != ar) && pd <= off_bound) {
      out.push_back({p, PrimeClause::kOffClass});
    } else if (!a_is_one && one && pd >= t && pd <= off_bound) {
      out.push_back({p, PrimeClause::kLargeOneModQ});
    } else if (!a_is_one && r == ar && pd <= in_class_bound) {
      out.push_back({p, PrimeClause::kSmallInClass});
    }
  }
  return out;
}

std::vector<std::string> plan_violations(const ModulusPlan& plan) {
  std::vector<std::string> out;
  const double log_H = std::log(plan.H);
  for (u64 p : plan.Q.primes()) {
    if (static_cast<double>(p) > plan.H) {
      out.push_back("Q has prime factor " + std::to_string(p) + " > H");
      break;
    }
  }
  for (u64 p = 2; static_cast<double>(p) <= log_H; p = next_prime(p)) {
    if (!plan.Q.divisible_by_prime(p)) {
      out.push_back("prime " + std::to_string(p) + " <= log H does not divide Q");
    }
  }
  if (plan.log_Q_margin > plan.c) {
    out.push_back("log Q (log H)^2 / H = " + std::to_string(plan.log_Q_margin) + " exceeds c = " +
                  std::to_string(plan.c));
  }
  if (plan.p0 != 1 && plan.Q.divisible_by_prime(plan.p0)) out.push_back("p0 divides Q");
  if (plan.Q.mod(plan.q) != 0) out.push_back("q does not divide Q");
  return out;
}

namespace {

void finish_plan(ModulusPlan& plan) {
  plan.phi_ratio = plan.Q.phi_ratio();
  const double log_H = std::log(plan.H);
  plan.log_Q_margin = plan.Q.log_value() * log_H * log_H / plan.H;
  if (plan.H >= kMinShiuH) plan.t_H = t_of_H(plan.H);
}

}  // namespace

ModulusPlan build_plan(u64 q, i64 a, double H, const PrimeTable& table, const PlanOptions& options) {
  ModulusPlan plan;
  plan.q = q;
  plan.a = checked_residue(q, a);
  plan.H = H;
  plan.c = options.c;
  if (!(options.c > 0.0)) throw DomainError("c must be positive");
  if (options.p0) {
    const u64 p0 = *options.p0;
    if (p0 != 1) {
      if (!is_prime_u64(p0)) throw DomainError("injected p0 must be prime");
      if (!(static_cast<double>(p0) > std::log(H))) throw DomainError("injected p0 must exceed log H");
      plan.p0 = p0;
    }
  }
  plan.prime_set = build_prime_set(q, a, H, table);

  std::vector<PrimePower> factors = factorize(q);
  for (const auto& e : plan.prime_set) factors.push_back({e.p, 1});
  plan.Q_tilde = FactoredModulus(std::move(factors));
  plan.Q = plan.Q_tilde;
  if (plan.p0 != 1) {
    if (q % plan.p0 == 0) throw ConstructionError("p0 divides q, so p0 cannot be removed from Q");
    const bool listed = std::any_of(plan.prime_set.begin(), plan.prime_set.end(),
                                    [&](const PrimeSetEntry& e) { return e.p == plan.p0; });
    if (listed) plan.Q = plan.Q_tilde.without_prime(plan.p0);
  }
  finish_plan(plan);

  if (auto bad = plan_violations(plan); !bad.empty()) {
    std::string msg = "modulus plan violates its conditions:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw ConstructionError(msg);
  }
  return plan;
}

ModulusPlan make_explicit_plan(u64 q, i64 a, double H, u64 Q, u64 p0) {
  ModulusPlan plan;
  plan.q = q;
  if (q < 1) throw DomainError("q must be >= 1");
  plan.a = residue(a, q);
  if (std::gcd(q, plan.a) != 1) throw DomainError("(q, a) must be 1");
  if (!(H >= 1.0)) throw DomainError("H must be >= 1");
  if (Q % q != 0) throw DomainError("q must divide Q");
  plan.H = H;
  plan.p0 = p0;
  plan.explicit_modulus = true;
  plan.Q_tilde = FactoredModulus::of(Q);
  plan.Q = plan.Q_tilde;
  if (p0 != 1 && plan.Q.divisible_by_prime(p0)) throw DomainError("p0 must not divide Q");
  finish_plan(plan);
  return plan;
}

namespace {

constexpr u64 kResidueBlock = u64{1} << 16;

ResidueSets split_classes(const ModulusPlan& plan, const std::vector<u64>& coprime) {
  ResidueSets out;
  for (u64 h : coprime) (h % plan.q == plan.a ? out.S : out.T).push_back(h);
  return out;
}

}  // namespace

ResidueSets residue_sets(const ModulusPlan& plan, bool use_Q_tilde) {
  const FactoredModulus& mod = use_Q_tilde ? plan.Q_tilde : plan.Q;
  const u64 top = static_cast<u64>(std::floor(plan.H));
  const i64 blocks = static_cast<i64>((top + kResidueBlock - 1) / kResidueBlock);
  std::vector<std::vector<u64>> per_block(static_cast<std::size_t>(blocks));
  const auto primes = mod.primes();

#pragma omp parallel for schedule(dynamic)
  for (i64 b = 0; b < blocks; ++b) {
    const u64 lo = 1 + static_cast<u64>(b) * kResidueBlock;  // block covers [lo, hi]
    const u64 hi = std::min(top, lo + kResidueBlock - 1);
    std::vector<char> alive(hi - lo + 1, 1);
    for (u64 p : primes) {
      if (p > hi) break;
      for (u64 m = (lo + p - 1) / p * p; m <= hi; m += p) alive[m - lo] = 0;
    }
    auto& out = per_block[static_cast<std::size_t>(b)];
    for (u64 h = lo; h <= hi; ++h) {
      if (alive[h - lo]) out.push_back(h);
    }
  }
  std::vector<u64> coprime;
  for (auto& v : per_block) coprime.insert(coprime.end(), v.begin(), v.end());
  return split_classes(plan, coprime);
}

ResidueSets residue_sets_serial(const ModulusPlan& plan, bool use_Q_tilde) {
  const FactoredModulus& mod = use_Q_tilde ? plan.Q_tilde : plan.Q;
  const auto value = mod.value();
  const u64 top = static_cast<u64>(std::floor(plan.H));
  std::vector<u64> coprime;
  for (u64 h = 1; h <= top; ++h) {
    bool ok;
    if (value) {
      ok = std::gcd(h, *value) == 1;
    } else {
      ok = true;
      for (u64 p : mod.primes()) {
        if (h % p == 0) {
          ok = false;
          break;
        }
      }
    }
    if (ok) coprime.push_back(h);
  }
  return split_classes(plan, coprime);
}

ClassBalance class_balance(const ModulusPlan& plan) {
  ClassBalance r;
  r.H = plan.H;
  const auto sets = residue_sets(plan, false);
  r.S_count = sets.S.size();
  r.T_count = sets.T.size();
  if (plan.p0 == 1 || plan.explicit_modulus) {
    r.S_tilde_count = r.S_count;
    r.T_tilde_count = r.T_count;
  } else {
    const auto tilde = residue_sets(plan, true);
    r.S_tilde_count = tilde.S.size();
    r.T_tilde_count = tilde.T.size();
  }
  const double log_H = std::log(plan.H);
  r.H_over_log_H = plan.H / log_H;
  r.H_phi_ratio = plan.H * plan.phi_ratio;
  r.T_ratio = static_cast<double>(r.T_count) * log_H / plan.H;
  r.S_minus_T_ratio = (static_cast<double>(r.S_count) - static_cast<double>(r.T_count)) / r.H_phi_ratio;
  r.S_tilde_ratio = static_cast<double>(r.S_tilde_count) / (plan.H * plan.Q_tilde.phi_ratio());
  r.below_regime = r.S_count <= r.T_count;
  return r;
}

SweepResult class_balance_sweep(u64 q, i64 a, double X, double A, int points, const PrimeTable& table,
                          const PlanOptions& options) {
  if (!(X >= kMinShiuH)) throw DomainError("sweep needs X >= 5000");
  if (points < 1) throw DomainError("sweep needs at least one grid point");
  const double lo = std::max(kMinShiuH, X / std::pow(std::log(X), A));
  SweepResult out;
  for (int i = 0; i < points; ++i) {
    const double H = points == 1 ? X : lo * std::pow(X / lo, static_cast<double>(i) / (points - 1));
    out.points.push_back(class_balance(build_plan(q, a, H, table, options)));
    if (out.points.back().S_tilde_ratio > out.points[out.best].S_tilde_ratio) out.best = out.points.size() - 1;
  }
  return out;
}

RankinReport rankin_bound(const ModulusPlan& plan, double X) {
  if (!(X >= 100.0)) throw DomainError("rankin_bound needs X >= 100");
  RankinReport r;
  r.X = X;
  const double log_X = std::log(X);
  const double root = std::sqrt(X);
  double log_major = (5.0 / 6.0) * log_X;
  for (u64 p = 2; static_cast<double>(p) <= log_X; p = next_prime(p)) {
    log_major -= std::log1p(-std::pow(static_cast<double>(p), -2.0 / 3.0));
    if (p % plan.q == 1 % plan.q) r.qualifying_primes.push_back(p);
  }
  r.majorant = std::exp(log_major);

  constexpr u64 kBudget = 50'000'000;
  const u64 top = static_cast<u64>(std::floor(X));
  long double sum = 0.0L;
  u64 visited = 0;
  std::function<void(std::size_t, u64)> walk = [&](std::size_t start, u64 d) {
    for (std::size_t j = start; j < r.qualifying_primes.size(); ++j) {
      const u64 p = r.qualifying_primes[j];
      if (p > top / d) break;
      for (u64 m = d * p;; m *= p) {
        if (++visited > kBudget) throw ResourceError("rankin_bound enumeration budget exceeded");
        if (static_cast<double>(m) > root) {
          const double md = static_cast<double>(m);
          ++r.terms;
          sum += (X / md) * std::cbrt(md / root);
        }
        walk(j + 1, m);
        if (m > top / p) break;
      }
    }
  };
  walk(0, 1);
  r.sum = static_cast<double>(sum);
  return r;
}

}  // namespace apgaps
