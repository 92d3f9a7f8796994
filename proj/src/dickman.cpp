#include "apgaps/dickman.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "apgaps/errors.hpp"

namespace apgaps {

namespace {

// Lagrange interpolation through four equally spaced nodes at 0,1,2,3 (in
// units of the grid step), evaluated at offset s.
double lagrange4(const double* f, double s) {
  const double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
  const double l1 = s * (s - 2) * (s - 3) / 2.0;
  const double l2 = -s * (s - 1) * (s - 3) / 2.0;
  const double l3 = s * (s - 1) * (s - 2) / 6.0;
  return l0 * f[0] + l1 * f[1] + l2 * f[2] + l3 * f[3];
}

// Composite Simpson over m cells of width h; a 3/8 rule takes the first three
// cells when m is odd.
double unit_integral(const double* g, int m, double h) {
  double s = 0.0;
  int j = 0;
  if (m % 2 == 1) {
    s += 3.0 * h / 8.0 * (g[0] + 3 * g[1] + 3 * g[2] + g[3]);
    j = 3;
  }
  for (; j < m; j += 2) s += h / 3.0 * (g[j] + 4 * g[j + 1] + g[j + 2]);
  return s;
}

}  // namespace

DickmanTable build_rho(double u_max, double step) {
  if (!(u_max >= 2.0)) throw DomainError("rho table needs u_max >= 2");
  if (!(step > 0.0) || step > 1.0 / 256.0) throw DomainError("rho step must lie in (0, 1/256]");

  DickmanTable t;
  t.per_unit_ = static_cast<int>(std::ceil(1.0 / step - 1e-9));
  const int m = t.per_unit_;
  const int units = static_cast<int>(std::ceil(u_max - 1e-12));
  t.u_max_ = units;
  t.step_ = 1.0 / m;
  const double h = t.step_;
  const std::size_t n = static_cast<std::size_t>(units) * m;
  t.values_.assign(n + 1, 1.0);

  std::vector<double> f(m + 1);
  for (int k = 1; k < units; ++k) {
    const std::size_t base = static_cast<std::size_t>(k) * m;
    // Restart from rho(k) = (1/k) int_{k-1}^k rho, a sum of positive terms.
    // Carrying rho(k) over by subtraction leaves an absolute rounding floor
    // near 1e-16 that swamps rho once u passes ~13.
    if (k >= 2) t.values_[base] = unit_integral(t.values_.data() + base - m, m, h) / k;
    for (int j = 0; j <= m; ++j) {
      const double u = static_cast<double>(base + j) / m;
      f[j] = t.values_[base + j - m] / u;
    }
    for (int j = 0; j < m; ++j) {
      double cell;
      if (j == 0) {
        cell = 9 * f[0] + 19 * f[1] - 5 * f[2] + f[3];
      } else if (j == m - 1) {
        cell = f[m - 3] - 5 * f[m - 2] + 19 * f[m - 1] + 9 * f[m];
      } else {
        cell = -f[j - 1] + 13 * f[j] + 13 * f[j + 1] - f[j + 2];
      }
      t.values_[base + j + 1] = t.values_[base + j] - h * cell / 24.0;
    }
  }

  // Composite Simpson within each unit interval (3/8 rule closes odd counts).
  t.segment_partial_.assign(n + 1, 0.0);
  t.segment_prefix_.assign(units + 1, 0.0);
  for (int k = 0; k < units; ++k) {
    const double* g = t.values_.data() + static_cast<std::size_t>(k) * m;
    std::vector<double> part(m + 1, 0.0);
    part[1] = h * (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]) / 24.0;
    for (int j = 2; j <= m; j += 2) part[j] = part[j - 2] + h / 3.0 * (g[j - 2] + 4 * g[j - 1] + g[j]);
    for (int j = 3; j <= m; j += 2) {
      part[j] = part[j - 3] + 3.0 * h / 8.0 * (g[j - 3] + 3 * g[j - 2] + 3 * g[j - 1] + g[j]);
    }
    for (int j = 0; j < m; ++j) t.segment_partial_[static_cast<std::size_t>(k) * m + j] = part[j];
    t.segment_prefix_[k + 1] = t.segment_prefix_[k] + part[m];
  }

  double worst = 0.0;
  for (std::size_t i = static_cast<std::size_t>(m) + 1; i <= n; ++i) {
    const double u = static_cast<double>(i) / m;
    const double integral = t.cumulative(i) - t.cumulative(i - m);
    worst = std::max(worst, std::abs(u * t.values_[i] - integral));
  }
  t.max_residual_ = worst;
  if (worst > kDickmanResidualTolerance) {
    throw AccuracyError("rho integral-equation residual " + std::to_string(worst) +
                        " exceeds tolerance; reduce the step");
  }
  return t;
}

double DickmanTable::cumulative(std::size_t i) const {
  return segment_prefix_[i / per_unit_] + segment_partial_[i];
}

double DickmanTable::rho(double u) const {
  if (u < 0.0) throw DomainError("rho is evaluated for u >= 0 only");
  if (u <= 1.0) return 1.0;
  if (u > u_max_) throw RangeError("u = " + std::to_string(u) + " beyond rho table");
  const int m = per_unit_;
  const int units = static_cast<int>(u_max_);
  const int k = std::min(static_cast<int>(std::floor(u)), units - 1);
  const double x = (u - k) * m;
  const int j0 = std::clamp(static_cast<int>(std::floor(x)), 0, m - 1);
  const int s = std::clamp(j0 - 1, 0, m - 3);
  return lagrange4(values_.data() + static_cast<std::size_t>(k) * m + s, x - s);
}

double DickmanTable::integral_from_zero(double u) const {
  if (u < 0.0 || u > u_max_) throw RangeError("integral bound outside rho table");
  const std::size_t n = values_.size() - 1;
  const std::size_t i = std::min(n, static_cast<std::size_t>(std::floor(u * per_unit_)));
  const double ui = static_cast<double>(i) / per_unit_;
  double value = cumulative(i);
  const double width = u - ui;
  if (width > 0.0) {
    // three-point Gauss-Legendre, exact for the cubic interpolant
    static constexpr double kNode = 0.7745966692414834;
    const double mid = ui + 0.5 * width, half = 0.5 * width;
    value += half * (5.0 / 9.0 * rho(mid - half * kNode) + 8.0 / 9.0 * rho(mid) +
                     5.0 / 9.0 * rho(mid + half * kNode));
  }
  return value;
}

TailIntegral rho_tail_integral(const DickmanTable& table, double u) {
  if (u < 0.0 || u > table.u_max()) throw RangeError("tail integral lower bound outside [0, u_max]");
  TailIntegral out;
  out.value = table.integral_from_zero(table.u_max()) - table.integral_from_zero(u);
  out.uncertainty = std::pow(table.u_max(), -table.u_max());
  return out;
}

namespace {

constexpr u64 kPsiMaxX = 1'000'000'000'000ULL;
constexpr u64 kPsiMaxPrimeBound = 1'000'000'000ULL;
constexpr u64 kPsiCallBudget = 50'000'000ULL;

struct PsiKey {
  u64 x;
  std::size_t k;
  bool operator==(const PsiKey&) const = default;
};

struct PsiKeyHash {
  std::size_t operator()(const PsiKey& key) const {
    return std::hash<u64>{}(key.x * 0x9e3779b97f4a7c15ULL ^ key.k);
  }
};

class PsiCounter {
 public:
  PsiCounter(std::vector<u64> primes, u64 covered) : ps_(std::move(primes)), covered_(covered) {}

  // Integers <= x whose prime factors are all among ps_[0..k).
  u64 count(u64 x, std::size_t k) {
    if (x == 0) return 0;
    if (x == 1 || k == 0) return 1;
    if (ps_[k - 1] > x) {
      k = static_cast<std::size_t>(std::upper_bound(ps_.begin(), ps_.begin() + k, x) - ps_.begin());
      if (k == 0) return 1;
    }
    // every prime <= x allowed
    if (k < ps_.size() ? ps_[k] > x : covered_ >= x) return x;
    const PsiKey key{x, k};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (++calls_ > kPsiCallBudget) throw ResourceError("psi_exact recursion budget exceeded");

    // classify n > 1 by its largest prime factor p_i
    u64 total = 1;
    for (std::size_t i = 0; i < k; ++i) {
      const u64 p = ps_[i];
      if (p > x / p) {
        for (std::size_t j = i; j < k; ++j) total += x / ps_[j];
        break;
      }
      total += count(x / p, i + 1);
    }
    memo_.emplace(key, total);
    return total;
  }

  std::size_t size() const { return ps_.size(); }

 private:
  std::vector<u64> ps_;
  u64 covered_;
  u64 calls_ = 0;
  std::unordered_map<PsiKey, u64, PsiKeyHash> memo_;
};

std::vector<u64> primes_upto(u64 bound) {
  if (bound < 2) return {};
  auto table = sieve(bound);
  return {table.primes().begin(), table.primes().end()};
}

void enumerate_smooth(u64 x, std::span<const u64> ps, std::size_t start, u64 n,
                      const std::function<void(u64)>& visit, u64& budget) {
  for (std::size_t j = start; j < ps.size(); ++j) {
    const u64 p = ps[j];
    if (p > x / n) break;
    u64 m = n * p;
    while (true) {
      if (budget-- == 0) throw ResourceError("smooth-number enumeration budget exceeded");
      visit(m);
      enumerate_smooth(x, ps, j + 1, m, visit, budget);
      if (m > x / p) break;
      m *= p;
    }
  }
}

std::vector<u64> normalized_prime_set(std::span<const u64> primes, u64 y) {
  std::vector<u64> ps;
  for (u64 p : primes) {
    if (p <= y) ps.push_back(p);
  }
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  return ps;
}

double euler_product(std::span<const u64> ps) {
  double log_sum = 0.0;
  for (u64 p : ps) log_sum += std::log1p(-1.0 / static_cast<double>(p));
  return std::exp(log_sum);
}

}  // namespace

u64 psi_exact(u64 x, u64 y) {
  if (x < 1) throw DomainError("psi_exact needs x >= 1");
  if (y < 2) throw DomainError("psi_exact needs y >= 2");
  if (x > kPsiMaxX) throw ResourceError("psi_exact limited to x <= 1e12");
  const u64 bound = std::min(x, y);
  if (bound > kPsiMaxPrimeBound) throw ResourceError("psi_exact prime bound too large");
  PsiCounter counter(primes_upto(bound), bound);
  return counter.count(x, counter.size());
}

SmoothCount psi_ratio_report(u64 y, double u, const DickmanTable& table) {
  if (u < 0.0) throw DomainError("u must be non-negative");
  const double xd = std::pow(static_cast<double>(y), u);
  if (!(xd < 1.5e12)) throw ResourceError("y^u too large for exact counting");
  SmoothCount out;
  out.y = y;
  out.u = u;
  out.x = static_cast<u64>(std::llround(xd));
  out.exact = psi_exact(out.x, y);
  out.rho_estimate = static_cast<double>(out.x) * table.rho(u);
  out.ratio = static_cast<double>(out.exact) / out.rho_estimate;
  return out;
}

std::vector<u64> select_primes(const PrimeTable& table, u64 y, const std::function<bool(u64)>& admit) {
  if (y > table.limit()) throw RangeError("y exceeds prime table limit");
  std::vector<u64> out;
  for (u64 p : table.range(2, y)) {
    if (admit(p)) out.push_back(p);
  }
  return out;
}

SmoothSum restricted_smooth_sum(u64 x, u64 y, std::span<const u64> primes) {
  if (x < 1) throw DomainError("restricted_smooth_sum needs x >= 1");
  const auto ps = normalized_prime_set(primes, y);
  long double sum = 1.0L;  // n = 1
  SmoothSum out;
  out.terms = 1;
  u64 budget = kSmoothEnumerationBudget;
  enumerate_smooth(x, ps, 0, 1, [&](u64 n) { sum += 1.0L / n; ++out.terms; }, budget);
  out.product = euler_product(ps);
  out.value = static_cast<double>(sum * out.product);
  return out;
}

SmoothTail restricted_smooth_tail(u64 x, u64 x_cut, u64 y, std::span<const u64> primes) {
  if (x_cut <= x) throw DomainError("tail mode needs x_cut > x");
  const auto ps = normalized_prime_set(primes, y);
  long double sum = 0.0L;
  u64 budget = kSmoothEnumerationBudget;
  enumerate_smooth(x_cut, ps, 0, 1, [&](u64 n) { if (n > x) sum += 1.0L / n; }, budget);
  const double product = euler_product(ps);

  // sum_{n > X} 1/n <= X^{-s} prod (1 - p^{s-1})^{-1}, any 0 < s < 1
  SmoothTail out;
  out.value = static_cast<double>(sum * product);
  double best = ps.empty() ? 0.0 : INFINITY;
  for (int i = 1; i < 100 && !ps.empty(); ++i) {
    const double s = i / 100.0;
    double log_bound = -s * std::log(static_cast<double>(x_cut));
    for (u64 p : ps) log_bound -= std::log1p(-std::pow(static_cast<double>(p), s - 1.0));
    if (std::exp(log_bound) < best) {
      best = std::exp(log_bound);
      out.rankin_sigma = s;
    }
  }
  out.truncation_bound = best * product;
  if (out.truncation_bound > 0.1 * out.value) {
    throw AccuracyError("tail truncation bound exceeds 10% of the computed tail; raise x_cut");
  }
  return out;
}

InclusionCheck monotone_inclusion_check(u64 x, u64 y, std::span<const u64> primes) {
  const auto all = primes_upto(y);
  InclusionCheck out;
  out.lhs = 1.0 - restricted_smooth_sum(x, y, primes).value;
  out.rhs = 1.0 - restricted_smooth_sum(x, y, all).value;
  out.holds = out.lhs <= out.rhs + kInclusionTolerance;
  return out;
}

u64 count_1mod_q_smooth(u64 x, u64 q) {
  if (q < 3) throw DomainError("count_1mod_q_smooth needs q >= 3");
  if (x < 1) return 0;
  if (x > kPsiMaxPrimeBound) throw ResourceError("count_1mod_q_smooth limited to x <= 1e9");
  std::vector<u64> ps;
  for (u64 p : primes_upto(x)) {
    if (p % q == 1) ps.push_back(p);
  }
  u64 count = 1;
  u64 budget = kSmoothEnumerationBudget;
  enumerate_smooth(x, ps, 0, 1, [&](u64) { ++count; }, budget);
  return count;
}

}  // namespace apgaps
