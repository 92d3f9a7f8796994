#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "apgaps/errors.hpp"
#include "apgaps/functional.hpp"
#include "oracles.hpp"

using namespace apgaps;
using doctest::Approx;

namespace {
const PrimeTable& table() {
  static const PrimeTable t = sieve(2'000'000);
  return t;
}

GpyConfig config_for(u64 N, double eps_prime, int ell) {
  GpyConfig c;
  c.N = N;
  c.R = R_of(N, eps_prime);
  c.ell = ell;
  return c;
}

double brute_moment2(u64 Q, const std::vector<u64>& shifts, u64 N, double R, int j) {
  double s = 0;
  for (u64 n = N + 1; n <= 2 * N; ++n) {
    const double w = oracle::Lambda(Q, shifts, n, R, j);
    s += w * w;
  }
  return s;
}
}  // namespace

TEST_CASE("parameter helpers") {
  CHECK(R_of(10'000, 0.05) == Approx(std::pow(1e4, 0.2)));
  CHECK(epsilon_prime_of(R_of(10'000, 0.05), 10'000) == Approx(0.05));
  CHECK_THROWS_AS(R_of(100, 0.0), DomainError);
  CHECK_THROWS_AS(R_of(100, 0.25), DomainError);
  CHECK(default_ell(1) == 1);
  CHECK(default_ell(10) == 3);
  CHECK(default_ell(100) == 10);
  CHECK(default_epsilon_prime(0.5, 0.1) == Approx(0.005));
  CHECK(predicted_moment2(2, 1, std::exp(1.0)) == Approx(2.0 / 24.0));
  CHECK(predicted_theta_moment(2, 1, std::exp(1.0), 3.0, false) == Approx(3.0 * 2.0 / 24.0));
  CHECK(predicted_theta_moment(2, 1, std::exp(1.0), 3.0, true) == Approx(6.0 / 120.0));
}

TEST_CASE("bracket examples") {
  const double b = functional_bracket(100, 10, 0.0, 1.0, 0.0, 1.0);
  CHECK(b == Approx(2.0 * 21 / 11 * 100.0 / 121 * 0.25 - 1.0));
  CHECK(b == Approx(-0.2107).epsilon(1e-3));
  CHECK(functional_bracket(100, 10, 0.0, 2.0, 5.0, 10.0) == Approx(b + 1.0));
  for (int k : {100, 10'000}) {
    const int l = default_ell(k);
    const double term = 2.0 * (2.0 * l + 1) / (l + 1) * k / (k + 2.0 * l + 1) * 0.25;
    CHECK(term >= 1.0 - 5.0 / std::sqrt(static_cast<double>(k)));
  }
}

TEST_CASE("moment2 with tiny R is the constant weight") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  GpyConfig c;
  c.N = 100;
  c.R = 1.5;
  c.ell = 0;
  const std::vector<u64> shifts{5};
  const auto m = moment2(plan, shifts, c);
  CHECK(m.measured == Approx(plan.phi_ratio * std::pow(std::log(1.5), 2)).epsilon(1e-13));
  CHECK(m.predicted == Approx(std::log(1.5)).epsilon(1e-14));
  CHECK_FALSE(m.sampled);
  CHECK(m.std_error == 0.0);
}

TEST_CASE("moment2 matches a brute-force sum") {
  for (u64 N : {200ull, 1000ull}) {
    const auto plan = make_explicit_plan(3, 2, 30, 6);
    const std::vector<u64> shifts{5, 11};
    const auto c = config_for(N, 0.01, 1);
    const auto m = moment2(plan, shifts, c);
    const double brute = brute_moment2(6, shifts, N, c.R, 3) * plan.phi_ratio * plan.phi_ratio / N;
    CHECK(m.measured == Approx(brute).epsilon(1e-10));
    CHECK(m.ratio == Approx(m.measured / m.predicted));
  }
}

TEST_CASE("permutation invariance") {
  const auto plan = make_explicit_plan(3, 2, 30, 210);
  const auto c = config_for(5000, 0.05, 1);
  const std::vector<u64> a{11, 17, 23}, b{23, 11, 17};
  const auto ma = moment2(plan, a, c), mb = moment2(plan, b, c);
  CHECK(ma.measured == Approx(mb.measured).epsilon(1e-12));
  CHECK(ma.predicted == mb.predicted);
  const auto ta = theta_moment(plan, a, 17, c), tb = theta_moment(plan, b, 17, c);
  CHECK(ta.measured == Approx(tb.measured).epsilon(1e-12));
}

TEST_CASE("theta moment with tiny R reduces to a theta sum") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  GpyConfig c;
  c.N = 2000;
  c.R = 1.8;
  c.ell = 1;
  const std::vector<u64> shifts{5, 11};
  for (u64 h : {5ull, 7ull, 13ull}) {
    const auto t = theta_moment(plan, shifts, h, c);
    const double theta = theta_sum(table(), 6 * 2 * c.N + h, 6, static_cast<i64>(h)) -
                         theta_sum(table(), 6 * c.N + h, 6, static_cast<i64>(h));
    const double w = std::pow(std::log(c.R), 3) / 6.0;
    const double expect = plan.phi_ratio * plan.phi_ratio * w * w * theta / static_cast<double>(c.N);
    CHECK(t.measured == Approx(expect).epsilon(1e-12));
    CHECK(t.which == (h == 5 || h == 11 ? ThetaCase::kInside : ThetaCase::kOutside));
  }
}

TEST_CASE("translation identity for h in the tuple") {
  const auto plan = make_explicit_plan(3, 2, 30, 210);
  const std::vector<u64> shifts{11, 17, 23};
  const u64 N = 20'000;
  const double R = R_of(N, 0.05);
  for (u64 h : shifts) {
    std::vector<u64> rest;
    for (u64 s : shifts) {
      if (s != h) rest.push_back(s);
    }
    CHECK(theta_weighted_sum(plan, shifts, h, N, R, 4) == theta_weighted_sum(plan, rest, h, N, R, 4));
  }
}

TEST_CASE("functional decomposes into theta moments") {
  const auto plan = make_explicit_plan(3, 2, 30, 210);
  const std::vector<u64> shifts{11, 17};
  const auto c = config_for(20'000, 0.05, 1);
  const auto rep = L_functional(plan, shifts, c);
  double s = 0, t = 0;
  for (const auto& tm : rep.theta_moments) (tm.h % 3 == 2 ? s : t) += tm.measured;
  const double recomposed = s - t - rep.log_part;
  const double scale = s + t + rep.log_part;
  CHECK(std::abs(rep.L_measured - recomposed) <= 1e-6 * scale);
  CHECK(rep.theta_S_part == Approx(s).epsilon(1e-9));
  CHECK(rep.theta_T_part == Approx(t).epsilon(1e-9));
  CHECK(rep.S_count + rep.T_count == rep.theta_moments.size());
  CHECK(rep.S_count == 4);  // 11, 17, 23, 29
  CHECK(rep.T_count == 3);  // 1, 13, 19
  CHECK(rep.L_predicted == Approx(rep.moment2.predicted * std::log(2e4) * rep.bracket));
  // the theta moment for h in the tuple matches the standalone evaluator
  for (const auto& tm : rep.theta_moments) {
    if (tm.h != 17) continue;
    const auto alone = theta_moment(plan, shifts, 17, c);
    CHECK(tm.which == ThetaCase::kInside);
    CHECK(alone.measured == Approx(tm.measured).epsilon(1e-12));
  }
  const std::vector<u64> bad{13};
  CHECK_THROWS_AS(L_functional(plan, bad, c), DomainError);
}

TEST_CASE("fourth moment") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  GpyConfig tiny;
  tiny.N = 500;
  tiny.R = 1.9;
  tiny.ell = 1;
  const std::vector<u64> shifts{5, 11};
  const auto f = fourth_moment(plan, shifts, tiny);
  CHECK(f.measured == Approx(500 * std::pow(std::pow(std::log(1.9), 3) / 6, 4)).epsilon(1e-12));
  CHECK(f.cauchy_schwarz);

  const auto c = config_for(20'000, 0.1, 1);
  const auto g = fourth_moment(make_explicit_plan(3, 2, 30, 210), std::vector<u64>{11, 17}, c);
  CHECK(g.measured <= g.majorant);
  CHECK(g.cauchy_schwarz);
  CHECK(g.measured * 20'000 >= g.sum_squares * g.sum_squares * (1 - 1e-12));

  GpyConfig wide;
  wide.N = 100;
  wide.R = 3.5;  // R^4 > N
  wide.ell = 1;
  CHECK_THROWS_AS(fourth_moment(plan, shifts, wide), DomainError);
}

TEST_CASE("monte carlo estimates are reproducible") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  const std::vector<u64> shifts{5, 11};
  auto c = config_for(100'000, 0.05, 1);
  c.monte_carlo_threshold = 1000;
  c.monte_carlo_samples = 20'000;
  const auto a = moment2(plan, shifts, c);
  const auto b = moment2(plan, shifts, c);
  CHECK(a.sampled);
  CHECK(a.std_error > 0.0);
  CHECK(a.measured == b.measured);
  c.seed += 1;
  const auto other = moment2(plan, shifts, c);
  CHECK(other.measured != a.measured);
  c.force_exact = true;
  const auto exact = moment2(plan, shifts, c);
  CHECK_FALSE(exact.sampled);
  CHECK(std::abs(a.measured - exact.measured) <= 5 * a.std_error);
}

TEST_CASE("bv error sum") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  const auto one = bv_error_sum(table(), plan, 10'000, 1);
  CHECK(one.terms == 1);
  CHECK(one.M == 180'000);
  CHECK(one.sum == e_star(table(), 180'000, 6));
  CHECK(one.sum == Approx(oracle::e_star(180'000, 6)).epsilon(1e-9));

  const auto toy = bv_error_sum(table(), plan, 10'000, 50);
  u64 expect_terms = 0;
  for (u64 D = 1; D <= 50; ++D) expect_terms += oracle::squarefree(D) && std::gcd(D, u64{6}) == 1;
  CHECK(toy.terms == expect_terms);
  CHECK(std::isfinite(toy.sum));
  CHECK(toy.sum <= static_cast<double>(toy.terms) * toy.max_term);
  CHECK(toy.normalized == Approx(toy.sum / (1e4 * std::log(1e4))));

  const auto with_p0 = make_explicit_plan(3, 2, 30, 6, 7);
  CHECK(bv_error_sum(table(), with_p0, 10'000, 50).terms == expect_terms - 2);  // 7 and 35
  CHECK_THROWS_AS(bv_error_sum(table(), plan, 10'000, 200'000), RangeError);
  CHECK_THROWS_AS(bv_error_sum(table(), plan, 1'000'000, 2), RangeError);
}

TEST_CASE("argument errors") {
  const auto plan = make_explicit_plan(3, 2, 30, 6);
  const std::vector<u64> not_coprime{3, 5};
  CHECK_THROWS_AS(moment2(plan, not_coprime, config_for(1000, 0.05, 1)), DomainError);
  GpyConfig bad;
  bad.N = 1000;
  bad.R = 10.0;  // eps' < 0
  CHECK_THROWS_AS(moment2(plan, std::vector<u64>{5}, bad), DomainError);
  CHECK_THROWS_AS(theta_moment(plan, std::vector<u64>{5}, 9, config_for(1000, 0.05, 1)), DomainError);
  const auto huge = make_explicit_plan(3, 2, 60, 3ull * 5 * 7 * 11 * 13 * 17 * 19 * 23 * 29 * 31 * 37 * 41 * 43 * 47);
  CHECK_THROWS_AS(theta_moment(huge, std::vector<u64>{53}, 53, config_for(1000, 0.05, 1)), ResourceError);
}
