#include "apgaps/functional.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "apgaps/errors.hpp"
#include "apgaps/reduce.hpp"

namespace apgaps {

double epsilon_prime_of(double R, u64 N) {
  return 0.25 - std::log(R) / std::log(static_cast<double>(N));
}

double R_of(u64 N, double epsilon_prime) {
  if (!(epsilon_prime > 0.0 && epsilon_prime < 0.25)) throw DomainError("eps' must lie in (0, 1/4)");
  return std::pow(static_cast<double>(N), 0.25 - epsilon_prime);
}

int default_ell(int k) { return static_cast<int>(std::floor(std::sqrt(static_cast<double>(k)))); }

double default_epsilon_prime(double epsilon, double c_q) { return c_q * epsilon / 10.0; }

double predicted_moment2(int k, int ell, double R) {
  const int m = k + 2 * ell;
  return binomial(2 * ell, ell) * std::exp(m * std::log(std::log(R)) - log_factorial(m));
}

double predicted_theta_moment(int k, int ell, double R, double Q_over_phi, bool inside) {
  if (!inside) return Q_over_phi * predicted_moment2(k, ell, R);
  const int m = k + 2 * ell + 1;
  return binomial(2 * ell + 2, ell + 1) * std::exp(m * std::log(std::log(R)) - log_factorial(m));
}

double functional_bracket(int k, int ell, double epsilon_prime, double Q_over_phi, double S_minus_T,
                          double log_N) {
  const double l = ell;
  return Q_over_phi * S_minus_T / log_N +
         2.0 * (2.0 * l + 1.0) / (l + 1.0) * k / (k + 2.0 * l + 1.0) * (0.25 - epsilon_prime) - 1.0;
}

std::string to_string(ThetaCase c) { return c == ThetaCase::kInside ? "inside" : "outside"; }

namespace {

struct Estimate {
  std::vector<double> total;
  std::vector<double> std_error;
  bool sampled = false;
};

// Estimates sum over N < n <= 2N of `width` per-n quantities, either exactly
// or from uniform samples of n (scaled by N).
template <class Term>
Estimate estimate_sums(const GpyConfig& config, std::size_t width, bool allow_sampling, Term&& term) {
  const u64 N = config.N;
  Estimate est;
  est.sampled = allow_sampling && !config.force_exact && N > config.monte_carlo_threshold;
  std::vector<u64> samples;
  if (est.sampled) {
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<u64> pick(N + 1, 2 * N);
    samples.resize(config.monte_carlo_samples);
    for (auto& s : samples) s = pick(rng);
  }
  const u64 count = est.sampled ? samples.size() : N;
  const std::size_t acc_width = est.sampled ? 2 * width : width;
  auto sums = chunked_sums(count, acc_width, [&](u64 i, double* acc) {
    thread_local std::vector<double> v;
    v.assign(width, 0.0);
    const u64 n = est.sampled ? samples[i] : N + 1 + i;
    term(n, v.data());
    for (std::size_t w = 0; w < width; ++w) {
      acc[w] += v[w];
      if (est.sampled) acc[width + w] += v[w] * v[w];
    }
  });
  est.total.assign(width, 0.0);
  est.std_error.assign(width, 0.0);
  for (std::size_t w = 0; w < width; ++w) {
    if (!est.sampled) {
      est.total[w] = sums[w];
      continue;
    }
    const double s = static_cast<double>(count);
    const double mean = sums[w] / s;
    const double var = std::max(0.0, sums[width + w] / s - mean * mean);
    est.total[w] = static_cast<double>(N) * mean;
    est.std_error[w] = static_cast<double>(N) * std::sqrt(var / s);
  }
  return est;
}

void check_config(const GpyConfig& config) {
  if (config.N < 2) throw DomainError("N must be >= 2");
  if (config.ell < 0) throw DomainError("l must be >= 0");
  const double eps = epsilon_prime_of(config.R, config.N);
  if (!(config.R > 1.0) || !(eps > 0.0 && eps < 0.25)) {
    throw DomainError("R must equal N^(1/4 - eps') with eps' in (0, 1/4)");
  }
}

TupleSpec checked_spec(const ModulusPlan& plan, std::span<const u64> shifts) {
  for (u64 h : shifts) {
    if (!plan.Q.coprime_to(h)) throw DomainError("shift " + std::to_string(h) + " is not coprime to Q");
  }
  return make_tuple_spec(plan.Q, {shifts.begin(), shifts.end()}, plan.H);
}

// Q as an integer, checked so that Qn + h fits for n <= 2N.
u64 integer_Q(const ModulusPlan& plan, u64 N) {
  const auto Q = plan.Q.value();
  if (!Q) throw ResourceError("Q does not fit in 64 bits; use an explicit modulus for prime sums");
  const auto top = checked_mul(*Q, 2 * N);
  if (!top || *top > ~u64{0} - static_cast<u64>(plan.H) - 1) {
    throw ResourceError("Qn + h overflows 64 bits for n <= 2N");
  }
  return *Q;
}

double theta_of(u64 m) { return is_prime_u64(m) ? std::log(static_cast<double>(m)) : 0.0; }

double normalization(const ModulusPlan& plan, std::size_t k, u64 N) {
  return std::pow(plan.phi_ratio, static_cast<double>(k)) / static_cast<double>(N);
}

}  // namespace

MomentResult moment2(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config) {
  check_config(config);
  const TupleSpec spec = checked_spec(plan, shifts);
  const int k = static_cast<int>(spec.k());
  const WeightKernel kernel(spec, make_weight_params(config.R, k + config.ell, plan.Q, plan.p0));
  const Estimate est = estimate_sums(config, 1, true, [&](u64 n, double* v) {
    const double w = kernel.value(n);
    v[0] = w * w;
  });
  const double norm = normalization(plan, spec.k(), config.N);
  MomentResult r;
  r.measured = norm * est.total[0];
  r.std_error = norm * est.std_error[0];
  r.sampled = est.sampled;
  r.predicted = predicted_moment2(k, config.ell, config.R);
  r.ratio = r.measured / r.predicted;
  return r;
}

ThetaMomentResult theta_moment(const ModulusPlan& plan, std::span<const u64> shifts, u64 h,
                               const GpyConfig& config) {
  check_config(config);
  if (h < 1 || static_cast<double>(h) > plan.H) throw DomainError("h must lie in [1, H]");
  if (!plan.Q.coprime_to(h)) throw DomainError("h must be coprime to Q");
  const TupleSpec spec = checked_spec(plan, shifts);
  const int k = static_cast<int>(spec.k());
  const u64 Q = integer_Q(plan, config.N);
  const WeightKernel kernel(spec, make_weight_params(config.R, k + config.ell, plan.Q, plan.p0));
  const Estimate est = estimate_sums(config, 1, true, [&](u64 n, double* v) {
    const double th = theta_of(Q * n + h);
    if (th == 0.0) return;
    const double w = kernel.value(n);
    v[0] = th * w * w;
  });
  const double norm = normalization(plan, spec.k(), config.N);
  ThetaMomentResult r;
  r.h = h;
  r.which = std::find(shifts.begin(), shifts.end(), h) != shifts.end() ? ThetaCase::kInside : ThetaCase::kOutside;
  r.measured = norm * est.total[0];
  r.std_error = norm * est.std_error[0];
  r.sampled = est.sampled;
  r.predicted = predicted_theta_moment(k, config.ell, config.R, 1.0 / plan.phi_ratio, r.which == ThetaCase::kInside);
  r.ratio = r.measured / r.predicted;
  return r;
}

double theta_weighted_sum(const ModulusPlan& plan, std::span<const u64> shifts, u64 h, u64 N, double R, int j) {
  const TupleSpec spec = make_tuple_spec(plan.Q, {shifts.begin(), shifts.end()}, plan.H);
  const u64 Q = integer_Q(plan, N);
  const WeightKernel kernel(spec, make_weight_params(R, j, plan.Q, plan.p0));
  GpyConfig exact;
  exact.N = N;
  exact.force_exact = true;
  return estimate_sums(exact, 1, false, [&](u64 n, double* v) {
           const double th = theta_of(Q * n + h);
           if (th == 0.0) return;
           const double w = kernel.value(n);
           v[0] = th * w * w;
         }).total[0];
}

FunctionalReport L_functional(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config) {
  check_config(config);
  for (u64 h : shifts) {
    if (h % plan.q != plan.a) throw DomainError("every shift must be = a mod q");
  }
  const TupleSpec spec = checked_spec(plan, shifts);
  const int k = static_cast<int>(spec.k());
  const u64 Q = integer_Q(plan, config.N);
  const ResidueSets sets = residue_sets(plan);
  const WeightKernel kernel(spec, make_weight_params(config.R, k + config.ell, plan.Q, plan.p0));
  const double log_3QN = std::log(3.0 * static_cast<double>(Q) * static_cast<double>(config.N));

  std::vector<u64> hs = sets.S;
  hs.insert(hs.end(), sets.T.begin(), sets.T.end());
  const std::size_t nS = sets.S.size();
  // columns: bracket*L^2, S part, T part, L^2, then theta(Qn+h) L^2 per h
  const std::size_t width = 4 + hs.size();
  const Estimate est = estimate_sums(config, width, true, [&](u64 n, double* v) {
    const double w = kernel.value(n);
    const double w2 = w * w;
    double s_part = 0.0, t_part = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double th = theta_of(Q * n + hs[i]);
      v[4 + i] = th * w2;
      (i < nS ? s_part : t_part) += th;
    }
    v[0] = (s_part - t_part - log_3QN) * w2;
    v[1] = s_part * w2;
    v[2] = t_part * w2;
    v[3] = w2;
  });

  const double norm = normalization(plan, spec.k(), config.N);
  const double Q_over_phi = 1.0 / plan.phi_ratio;
  FunctionalReport rep;
  rep.N = config.N;
  rep.R = config.R;
  rep.epsilon_prime = epsilon_prime_of(config.R, config.N);
  rep.k = k;
  rep.ell = config.ell;
  rep.q = plan.q;
  rep.a = plan.a;
  rep.H = plan.H;
  rep.Q = Q;
  rep.Q_over_phi = Q_over_phi;
  rep.shifts.assign(shifts.begin(), shifts.end());
  rep.S_count = sets.S.size();
  rep.T_count = sets.T.size();
  rep.sampled = est.sampled;

  rep.moment2.measured = norm * est.total[3];
  rep.moment2.std_error = norm * est.std_error[3];
  rep.moment2.sampled = est.sampled;
  rep.moment2.predicted = predicted_moment2(k, config.ell, config.R);
  rep.moment2.ratio = rep.moment2.measured / rep.moment2.predicted;

  for (std::size_t i = 0; i < hs.size(); ++i) {
    ThetaMomentResult t;
    t.h = hs[i];
    t.which = std::find(shifts.begin(), shifts.end(), hs[i]) != shifts.end() ? ThetaCase::kInside
                                                                               : ThetaCase::kOutside;
    t.measured = norm * est.total[4 + i];
    t.std_error = norm * est.std_error[4 + i];
    t.sampled = est.sampled;
    t.predicted = predicted_theta_moment(k, config.ell, config.R, Q_over_phi, t.which == ThetaCase::kInside);
    t.ratio = t.measured / t.predicted;
    rep.theta_moments.push_back(t);
  }

  rep.theta_S_part = norm * est.total[1];
  rep.theta_T_part = norm * est.total[2];
  rep.log_part = log_3QN * rep.moment2.measured;
  rep.L_measured = norm * est.total[0];
  rep.L_std_error = norm * est.std_error[0];

  const double log_N = std::log(static_cast<double>(config.N));
  const double S_minus_T = static_cast<double>(rep.S_count) - static_cast<double>(rep.T_count);
  rep.bracket = functional_bracket(k, config.ell, rep.epsilon_prime, Q_over_phi, S_minus_T, log_N);
  rep.L_predicted = rep.moment2.predicted * log_N * rep.bracket;
  const double l = config.ell;
  rep.L_predicted_detailed =
      rep.moment2.predicted *
      (Q_over_phi * (static_cast<double>(rep.S_count) - k) +
       2.0 * (2.0 * l + 1.0) / (l + 1.0) * std::log(config.R) / (k + 2.0 * l + 1.0) * k -
       Q_over_phi * static_cast<double>(rep.T_count) - log_3QN);
  return rep;
}

FourthMoment fourth_moment(const ModulusPlan& plan, std::span<const u64> shifts, const GpyConfig& config) {
  check_config(config);
  if (!(std::pow(config.R, 4.0) < static_cast<double>(config.N))) throw DomainError("fourth moment needs R^4 < N");
  const TupleSpec spec = checked_spec(plan, shifts);
  const int k = static_cast<int>(spec.k());
  const WeightKernel kernel(spec, make_weight_params(config.R, k + config.ell, plan.Q, plan.p0));
  const Estimate est = estimate_sums(config, 2, false, [&](u64 n, double* v) {
    const double w = kernel.value(n);
    const double w2 = w * w;
    v[0] = w2;
    v[1] = w2 * w2;
  });
  FourthMoment r;
  r.sum_squares = est.total[0];
  r.measured = est.total[1];
  const double N = static_cast<double>(config.N);
  r.majorant = N * std::pow(std::log(N), 19.0 * k + 4.0 * config.ell);
  r.ratio = r.measured / r.majorant;
  // tolerance covers rounding only
  r.cauchy_schwarz = r.measured * N >= r.sum_squares * r.sum_squares * (1.0 - 1e-12);
  return r;
}

BvErrorSum bv_error_sum(const PrimeTable& table, const ModulusPlan& plan, u64 N, u64 D_max) {
  if (D_max < 1) throw DomainError("D_max must be >= 1");
  const auto Q = plan.Q.value();
  if (!Q) throw RangeError("Q does not fit in 64 bits; use an explicit modulus");
  if (*Q * D_max > kMaxBvModulus) {
    throw RangeError("Q * D_max exceeds 1e6; shrink D_max");
  }
  BvErrorSum out;
  out.M = 3 * *Q * N;
  if (out.M > table.limit()) {
    throw RangeError("3QN = " + std::to_string(out.M) + " exceeds the prime table; shrink N or enlarge the table");
  }
  std::vector<u64> moduli;
  for (u64 D = 1; D <= D_max; ++D) {
    if (!is_squarefree(D) || !plan.Q.coprime_to(D)) continue;
    if (plan.p0 != 1 && D % plan.p0 == 0) continue;
    moduli.push_back(D);
  }
  std::vector<double> terms(moduli.size());
#pragma omp parallel for schedule(dynamic)
  for (i64 i = 0; i < static_cast<i64>(moduli.size()); ++i) {
    terms[static_cast<std::size_t>(i)] = e_star(table, out.M, *Q * moduli[static_cast<std::size_t>(i)]);
  }
  for (double t : terms) {
    out.sum += t;
    out.max_term = std::max(out.max_term, t);
  }
  out.terms = terms.size();
  const double Nd = static_cast<double>(N);
  out.normalized = out.sum / (Nd * std::log(Nd));
  return out;
}

}  // namespace apgaps
