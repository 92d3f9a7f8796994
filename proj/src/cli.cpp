#include "apgaps/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "apgaps/dickman.hpp"
#include "apgaps/errors.hpp"
#include "apgaps/functional.hpp"
#include "apgaps/hunter.hpp"
#include "apgaps/primes.hpp"
#include "apgaps/tuple_sieve.hpp"

namespace apgaps::cli {

using json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  // global
  std::string config_path;
  std::string format = "csv";
  std::string out;
  std::string cache;
  double memory_budget_gib = 4.0;
  u64 seed = 20110417;
  u64 samples = 100'000;
  double c = kDefaultPlanC;
  double c_q = 0.1;
  double A = 10.0;
  double rho_step = kDefaultRhoStep;

  // shared by subcommands
  u64 q = 3;
  i64 a = 2;
  std::optional<double> H;
  std::optional<u64> Q;
  std::optional<u64> p0;
  std::string plan_file;
  std::vector<u64> shifts;
  std::vector<u64> hs;
  std::string trace;
  std::optional<u64> N;
  std::optional<double> R;
  std::optional<double> eps_prime;
  double epsilon = 0.5;
  std::optional<int> ell;
  int k = 2;
  bool exact = false;

  u64 limit = 0;
  bool list = false;
  double u_max = 10.0;
  std::optional<double> step;
  u64 x = 0;
  u64 y = 0;
  u64 smooth_q = 0;
  std::optional<u64> x_cut;
  double X = 0.0;
  int points = 8;
  int j = 1;
  u64 lo = 1;
  u64 hi = 100;
  std::string form = "divisor";
  u64 D_max = 10;
  u64 max_gap = 6;
  bool stats = false;
  int grid = 20;
  std::optional<double> gap_epsilon;
  bool windows = false;
  bool all = false;
  std::optional<u64> toy_Q;
  double toy_H = 30.0;
};

template <class T>
const T& need(const std::optional<T>& v, const char* flag) {
  if (!v) throw UsageError(std::string(flag) + " is required");
  return *v;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
std::string fmt(u64 v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Emitter {
 public:
  Emitter(std::ostream& os, std::string format, std::string command, std::uint64_t hash)
      : os_(os), format_(std::move(format)), command_(std::move(command)) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    hash_ = buf;
  }

  bool csv() const { return format_ == "csv"; }

  void header(const std::vector<std::string>& cols) {
    os_ << "# tool=" << kToolName << " version=" << kToolVersion << " command=" << command_
        << " config_hash=" << hash_ << '\n';
    row(cols);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

  void document(json result) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    doc["command"] = command_;
    doc["config_hash"] = hash_;
    doc["result"] = std::move(result);
    os_ << doc.dump(2) << '\n';
  }

 private:
  std::ostream& os_;
  std::string format_;
  std::string command_;
  std::string hash_;
};

SieveOptions sieve_options(const Args& a) {
  SieveOptions o;
  if (!(a.memory_budget_gib > 0)) throw DomainError("memory budget must be positive");
  o.memory_budget_bytes = static_cast<std::size_t>(a.memory_budget_gib * 1024.0 * 1024.0 * 1024.0);
  return o;
}

PrimeTable table_for(const Args& a, u64 limit) {
  limit = std::max<u64>(limit, 2);
  if (!a.cache.empty()) return load_or_build(a.cache, limit, sieve_options(a));
  return sieve(limit, sieve_options(a));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModulusPlan toy_plan(const Args& a) {
  if (!a.plan_file.empty()) return plan_from_json(read_file(a.plan_file));
  return make_explicit_plan(a.q, a.a, need(a.H, "--H"), need(a.Q, "--Q or --plan"), a.p0.value_or(1));
}

GpyConfig gpy_config(const Args& a, u64 N, std::size_t k) {
  GpyConfig g;
  g.N = N;
  g.ell = a.ell.value_or(default_ell(static_cast<int>(k)));
  if (a.R) {
    g.R = *a.R;
  } else {
    g.R = R_of(N, a.eps_prime.value_or(default_epsilon_prime(a.epsilon, a.c_q)));
  }
  g.seed = a.seed;
  g.monte_carlo_samples = a.samples;
  g.force_exact = a.exact;
  return g;
}

json to_json(const MomentResult& m) {
  json j;
  j["measured"] = num(m.measured);
  j["predicted"] = num(m.predicted);
  j["ratio"] = num(m.ratio);
  j["std_error"] = num(m.std_error);
  j["sampled"] = m.sampled;
  return j;
}

json to_json(const ThetaMomentResult& t) {
  json j;
  j["h"] = t.h;
  j["case"] = to_string(t.which);
  j.update(to_json(static_cast<const MomentResult&>(t)));
  return j;
}

json to_json(const FunctionalReport& r) {
  json j;
  j["N"] = r.N;
  j["R"] = num(r.R);
  j["epsilon_prime"] = num(r.epsilon_prime);
  j["k"] = r.k;
  j["ell"] = r.ell;
  j["q"] = r.q;
  j["a"] = r.a;
  j["H"] = num(r.H);
  j["Q"] = r.Q;
  j["Q_over_phi"] = num(r.Q_over_phi);
  j["shifts"] = r.shifts;
  j["S_count"] = r.S_count;
  j["T_count"] = r.T_count;
  j["moment2"] = to_json(r.moment2);
  json thetas = json::array();
  for (const auto& t : r.theta_moments) thetas.push_back(to_json(t));
  j["theta_moments"] = thetas;
  j["theta_S_part"] = num(r.theta_S_part);
  j["theta_T_part"] = num(r.theta_T_part);
  j["log_part"] = num(r.log_part);
  j["L_measured"] = num(r.L_measured);
  j["L_std_error"] = num(r.L_std_error);
  j["L_predicted"] = num(r.L_predicted);
  j["L_predicted_detailed"] = num(r.L_predicted_detailed);
  j["bracket"] = num(r.bracket);
  j["sampled"] = r.sampled;
  return j;
}

json to_json(const ClassBalance& r) {
  json j;
  j["H"] = num(r.H);
  j["S_count"] = r.S_count;
  j["T_count"] = r.T_count;
  j["S_tilde_count"] = r.S_tilde_count;
  j["T_tilde_count"] = r.T_tilde_count;
  j["H_over_log_H"] = num(r.H_over_log_H);
  j["H_phi_ratio"] = num(r.H_phi_ratio);
  j["T_ratio"] = num(r.T_ratio);
  j["S_minus_T_ratio"] = num(r.S_minus_T_ratio);
  j["S_tilde_ratio"] = num(r.S_tilde_ratio);
  j["below_regime"] = r.below_regime;
  return j;
}

json plan_json(const ModulusPlan& plan, u64 S_count, u64 T_count) {
  json j;
  j["q"] = plan.q;
  j["a"] = plan.a;
  j["H"] = plan.H;
  j["t_H"] = plan.t_H ? json(*plan.t_H) : json(nullptr);
  j["p0"] = plan.p0;
  j["c"] = plan.c;
  j["explicit"] = plan.explicit_modulus;
  json factors = json::array();
  for (const auto& f : plan.Q.factors()) factors.push_back(json::array({f.p, f.e}));
  j["factors"] = factors;
  j["S_count"] = S_count;
  j["T_count"] = T_count;
  j["log_Q_margin"] = num(plan.log_Q_margin);
  return j;
}

// ---- subcommands ----

void cmd_sieve(const Args& a, Emitter& e) {
  if (a.limit < 2) throw UsageError("--limit must be >= 2");
  const PrimeTable t = table_for(a, a.limit);
  const auto ps = t.range(0, a.limit);
  if (e.csv()) {
    if (a.list) {
      e.header({"p"});
      for (u64 p : ps) e.row({fmt(p)});
    } else {
      e.header({"limit", "pi", "theta"});
      e.row({fmt(a.limit), fmt(static_cast<u64>(ps.size())), fmt(theta_sum(t, a.limit, 1, 0))});
    }
    return;
  }
  json j;
  j["limit"] = a.limit;
  j["pi"] = ps.size();
  j["theta"] = num(theta_sum(t, a.limit, 1, 0));
  if (a.list) j["primes"] = std::vector<u64>(ps.begin(), ps.end());
  e.document(j);
}

void cmd_rho(const Args& a, Emitter& e) {
  const DickmanTable t = build_rho(a.u_max, a.step.value_or(a.rho_step));
  const auto v = t.values();
  if (e.csv()) {
    e.header({"u", "rho"});
    for (std::size_t i = 0; i < v.size(); ++i) e.row({fmt(t.grid_u(i)), fmt(v[i])});
    return;
  }
  json j;
  j["u_max"] = t.u_max();
  j["step"] = t.step();
  j["per_unit"] = t.per_unit();
  j["max_residual"] = num(t.max_residual());
  json rows = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) rows.push_back(json::array({t.grid_u(i), v[i]}));
  j["values"] = rows;
  e.document(j);
}

void cmd_psi(const Args& a, Emitter& e) {
  if (a.x < 1 || a.y < 1) throw UsageError("--x and --y must be >= 1");
  const u64 count = psi_exact(a.x, a.y);
  double u = 0.0, estimate = NAN, ratio = NAN;
  if (a.y >= 2 && a.x >= 2) {
    u = std::log(static_cast<double>(a.x)) / std::log(static_cast<double>(a.y));
    const DickmanTable t = build_rho(std::max(2.0, std::ceil(u) + 1.0), a.rho_step);
    estimate = static_cast<double>(a.x) * t.rho(u);
    ratio = static_cast<double>(count) / estimate;
  }
  if (e.csv()) {
    e.header({"x", "y", "u", "psi", "rho_estimate", "ratio"});
    e.row({fmt(a.x), fmt(a.y), fmt(u), fmt(count), fmt(estimate), fmt(ratio)});
    return;
  }
  json j;
  j["x"] = a.x;
  j["y"] = a.y;
  j["u"] = num(u);
  j["psi"] = count;
  j["rho_estimate"] = num(estimate);
  j["ratio"] = num(ratio);
  e.document(j);
}

void cmd_smoothsum(const Args& a, Emitter& e) {
  if (a.x < 1 || a.y < 2) throw UsageError("--x >= 1 and --y >= 2 are required");
  const PrimeTable t = table_for(a, a.y);
  const u64 sq = a.smooth_q;
  const std::vector<u64> ps = select_primes(t, a.y, [sq](u64 p) { return sq == 0 || p % sq == 1; });
  const SmoothSum s = restricted_smooth_sum(a.x, a.y, ps);
  std::optional<SmoothTail> tail;
  if (a.x_cut) tail = restricted_smooth_tail(a.x, *a.x_cut, a.y, ps);
  std::optional<InclusionCheck> inc;
  if (sq != 0) inc = monotone_inclusion_check(a.x, a.y, ps);
  if (e.csv()) {
    e.header({"x", "y", "q", "value", "product", "terms", "tail_value", "truncation_bound", "rankin_sigma",
              "inclusion_lhs", "inclusion_rhs", "inclusion_holds"});
    e.row({fmt(a.x), fmt(a.y), fmt(sq), fmt(s.value), fmt(s.product), fmt(s.terms),
           tail ? fmt(tail->value) : "", tail ? fmt(tail->truncation_bound) : "",
           tail ? fmt(tail->rankin_sigma) : "", inc ? fmt(inc->lhs) : "", inc ? fmt(inc->rhs) : "",
           inc ? fmt(inc->holds) : ""});
    return;
  }
  json j;
  j["x"] = a.x;
  j["y"] = a.y;
  j["q"] = sq;
  j["value"] = num(s.value);
  j["product"] = num(s.product);
  j["terms"] = s.terms;
  if (tail) {
    j["tail_value"] = num(tail->value);
    j["truncation_bound"] = num(tail->truncation_bound);
    j["rankin_sigma"] = num(tail->rankin_sigma);
  }
  if (inc) j["inclusion"] = {{"lhs", num(inc->lhs)}, {"rhs", num(inc->rhs)}, {"holds", inc->holds}};
  e.document(j);
}

ModulusPlan shiu_plan(const Args& a, double H) {
  const PrimeTable t = table_for(a, static_cast<u64>(std::ceil(H)));
  PlanOptions o;
  o.p0 = a.p0;
  o.c = a.c;
  return build_plan(a.q, a.a, H, t, o);
}

void cmd_build_q(const Args& a, Emitter& e) {
  const ModulusPlan plan = a.Q ? make_explicit_plan(a.q, a.a, need(a.H, "--H"), *a.Q, a.p0.value_or(1))
                               : shiu_plan(a, need(a.H, "--H"));
  const ResidueSets sets = residue_sets(plan);
  if (e.csv()) {
    e.header({"q", "a", "H", "t_H", "p0", "prime_factors", "log_Q", "log_Q_margin", "S_count", "T_count"});
    e.row({fmt(plan.q), fmt(plan.a), fmt(plan.H), plan.t_H ? fmt(*plan.t_H) : "", fmt(plan.p0),
           fmt(static_cast<u64>(plan.Q.factors().size())), fmt(plan.Q.log_value()), fmt(plan.log_Q_margin),
           fmt(static_cast<u64>(sets.S.size())), fmt(static_cast<u64>(sets.T.size()))});
    return;
  }
  e.document(plan_json(plan, sets.S.size(), sets.T.size()));
}

void cmd_sweep_q(const Args& a, Emitter& e) {
  if (!(a.X >= kMinShiuH)) throw UsageError("--X must be >= 5000");
  const PrimeTable t = table_for(a, static_cast<u64>(std::ceil(a.X)));
  PlanOptions o;
  o.p0 = a.p0;
  o.c = a.c;
  const SweepResult sw = class_balance_sweep(a.q, a.a, a.X, a.A, a.points, t, o);
  if (e.csv()) {
    e.header({"H", "S_count", "T_count", "S_tilde_count", "T_tilde_count", "T_ratio", "S_minus_T_ratio",
              "S_tilde_ratio", "below_regime", "best"});
    for (std::size_t i = 0; i < sw.points.size(); ++i) {
      const auto& r = sw.points[i];
      e.row({fmt(r.H), fmt(r.S_count), fmt(r.T_count), fmt(r.S_tilde_count), fmt(r.T_tilde_count),
             fmt(r.T_ratio), fmt(r.S_minus_T_ratio), fmt(r.S_tilde_ratio), fmt(r.below_regime),
             fmt(i == sw.best)});
    }
    return;
  }
  json pts = json::array();
  for (const auto& r : sw.points) pts.push_back(to_json(r));
  e.document({{"points", pts}, {"best", sw.best}});
}

void cmd_weights(const Args& a, Emitter& e) {
  const FactoredModulus Q = FactoredModulus::of(need(a.Q, "--Q"));
  const TupleSpec spec = make_tuple_spec(Q, a.shifts, need(a.H, "--H"));
  const WeightParams params = make_weight_params(need(a.R, "--R"), a.j, Q, a.p0.value_or(1));
  if (a.hi < a.lo) throw UsageError("--hi must be >= --lo");
  if (a.form != "divisor" && a.form != "residue" && a.form != "both") throw UsageError("--form: divisor|residue|both");
  const WeightKernel kernel(spec, params);
  const std::vector<double> vals = kernel.values(a.lo, a.hi);
  const bool residue = a.form != "divisor";
  if (e.csv()) {
    if (residue) e.header({"n", "lambda", "lambda_residue"});
    else e.header({"n", "lambda"});
    for (u64 n = a.lo; n <= a.hi; ++n) {
      std::vector<std::string> r{fmt(n), fmt(vals[n - a.lo])};
      if (residue) r.push_back(fmt(big_lambda_residue(spec, n, params)));
      e.row(r);
    }
    return;
  }
  json rows = json::array();
  for (u64 n = a.lo; n <= a.hi; ++n) {
    json r{{"n", n}, {"lambda", num(vals[n - a.lo])}};
    if (residue) r["lambda_residue"] = num(big_lambda_residue(spec, n, params));
    rows.push_back(r);
  }
  e.document({{"admissible", spec.admissible}, {"values", rows}});
}

// Per-n CSV: n, Lambda_R(n), then theta(Qn + h) for each h.
void write_trace(const std::string& path, const ModulusPlan& plan, const std::vector<u64>& shifts,
                 const std::vector<u64>& hs, const GpyConfig& g) {
  const auto Q = plan.Q.value();
  if (!Q) throw ResourceError("--trace needs Q to fit in 64 bits");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ResourceError("cannot open " + path);
  const TupleSpec spec = make_tuple_spec(plan.Q, shifts, plan.H);
  const int j = static_cast<int>(shifts.size()) + g.ell;
  const WeightKernel kernel(spec, make_weight_params(g.R, j, plan.Q, plan.p0));
  f << "n,lambda";
  for (u64 h : hs) f << ",theta_" << h;
  f << '\n';
  constexpr u64 kChunk = 1 << 16;
  for (u64 lo = g.N + 1; lo <= 2 * g.N; lo += kChunk) {
    const u64 hi = std::min(2 * g.N, lo + kChunk - 1);
    const std::vector<double> vals = kernel.values(lo, hi);
    for (u64 n = lo; n <= hi; ++n) {
      f << n << ',' << fmt(vals[n - lo]);
      for (u64 h : hs) {
        const u64 m = *Q * n + h;
        f << ',' << (is_prime_u64(m) ? fmt(std::log(static_cast<double>(m))) : std::string("0"));
      }
      f << '\n';
    }
  }
  if (!f) throw ResourceError("write failed: " + path);
}

void cmd_moments(const Args& a, Emitter& e) {
  const ModulusPlan plan = toy_plan(a);
  const u64 N = need(a.N, "--N");
  const GpyConfig g = gpy_config(a, N, a.shifts.size());
  const MomentResult m = moment2(plan, a.shifts, g);
  std::vector<u64> hs = a.hs;
  if (hs.empty()) {
    const ResidueSets sets = residue_sets(plan);
    hs = sets.S;
    hs.insert(hs.end(), sets.T.begin(), sets.T.end());
    std::sort(hs.begin(), hs.end());
  }
  std::vector<ThetaMomentResult> thetas;
  for (u64 h : hs) thetas.push_back(theta_moment(plan, a.shifts, h, g));
  if (!a.trace.empty()) write_trace(a.trace, plan, a.shifts, hs, g);
  if (e.csv()) {
    e.header({"quantity", "h", "case", "measured", "predicted", "ratio", "std_error", "sampled"});
    e.row({"moment2", "", "", fmt(m.measured), fmt(m.predicted), fmt(m.ratio), fmt(m.std_error), fmt(m.sampled)});
    for (const auto& t : thetas) {
      e.row({"theta_moment", fmt(t.h), to_string(t.which), fmt(t.measured), fmt(t.predicted), fmt(t.ratio),
             fmt(t.std_error), fmt(t.sampled)});
    }
    return;
  }
  json th = json::array();
  for (const auto& t : thetas) th.push_back(to_json(t));
  e.document({{"N", N}, {"R", num(g.R)}, {"ell", g.ell}, {"moment2", to_json(m)}, {"theta_moments", th}});
}

void cmd_functional(const Args& a, Emitter& e) {
  const ModulusPlan plan = toy_plan(a);
  const u64 N = need(a.N, "--N");
  const FunctionalReport r = L_functional(plan, a.shifts, gpy_config(a, N, a.shifts.size()));
  if (e.csv()) {
    e.header({"field", "value"});
    const std::vector<std::pair<std::string, std::string>> rows{
        {"N", fmt(r.N)},
        {"R", fmt(r.R)},
        {"epsilon_prime", fmt(r.epsilon_prime)},
        {"k", fmt(r.k)},
        {"ell", fmt(r.ell)},
        {"Q", fmt(r.Q)},
        {"S_count", fmt(r.S_count)},
        {"T_count", fmt(r.T_count)},
        {"moment2", fmt(r.moment2.measured)},
        {"moment2_predicted", fmt(r.moment2.predicted)},
        {"theta_S_part", fmt(r.theta_S_part)},
        {"theta_T_part", fmt(r.theta_T_part)},
        {"log_part", fmt(r.log_part)},
        {"L_measured", fmt(r.L_measured)},
        {"L_std_error", fmt(r.L_std_error)},
        {"L_predicted", fmt(r.L_predicted)},
        {"L_predicted_detailed", fmt(r.L_predicted_detailed)},
        {"bracket", fmt(r.bracket)},
        {"sampled", fmt(r.sampled)}};
    for (const auto& [k, v] : rows) e.row({k, v});
    return;
  }
  e.document(to_json(r));
}

void cmd_bv_sum(const Args& a, Emitter& e) {
  const ModulusPlan plan = toy_plan(a);
  const u64 N = need(a.N, "--N");
  const auto Q = plan.Q.value();
  if (!Q) throw RangeError("Q does not fit in 64 bits");
  const auto M = checked_mul(3 * *Q, N);
  if (!M) throw RangeError("3QN overflows");
  const PrimeTable t = table_for(a, *M);
  const BvErrorSum s = bv_error_sum(t, plan, N, a.D_max);
  if (e.csv()) {
    e.header({"N", "D_max", "M", "terms", "sum", "max_term", "normalized"});
    e.row({fmt(N), fmt(a.D_max), fmt(s.M), fmt(s.terms), fmt(s.sum), fmt(s.max_term), fmt(s.normalized)});
    return;
  }
  e.document({{"N", N},
              {"D_max", a.D_max},
              {"M", s.M},
              {"terms", s.terms},
              {"sum", num(s.sum)},
              {"max_term", num(s.max_term)},
              {"normalized", num(s.normalized)}});
}

void cmd_hunt(const Args& a, Emitter& e) {
  if (a.stats) {
    const GapStatistics st = gap_statistics(a.q, a.a, a.limit, a.grid, a.gap_epsilon);
    if (e.csv()) {
      e.header({"kind", "x", "count", "count_small"});
      for (const auto& [gap, n] : st.histogram) e.row({"gap", fmt(gap), fmt(n), ""});
      for (std::size_t i = 0; i < st.Y.size(); ++i) {
        e.row({"cumulative", fmt(st.Y[i]), fmt(st.cumulative[i]),
               st.epsilon ? fmt(st.cumulative_small[i]) : ""});
      }
      return;
    }
    json hist = json::array();
    for (const auto& [gap, n] : st.histogram) hist.push_back(json::array({gap, n}));
    json j{{"q", st.q}, {"a", st.a}, {"limit", st.limit}, {"histogram", hist}, {"Y", st.Y},
           {"cumulative", st.cumulative}};
    if (st.epsilon) {
      j["epsilon"] = *st.epsilon;
      j["cumulative_small"] = st.cumulative_small;
    }
    e.document(j);
    return;
  }
  if (e.csv()) {
    e.header({"p_r", "p_r1", "gap", "ratio"});
    hunt(a.q, a.a, a.limit, a.max_gap,
         [&](const PairRecord& r) { e.row({fmt(r.p_r), fmt(r.p_r1), fmt(r.gap), fmt(r.ratio)}); });
    return;
  }
  json rows = json::array();
  hunt(a.q, a.a, a.limit, a.max_gap, [&](const PairRecord& r) {
    rows.push_back({{"p_r", r.p_r}, {"p_r1", r.p_r1}, {"gap", r.gap}, {"ratio", num(r.ratio)}});
  });
  e.document({{"q", a.q}, {"a", residue(a.a, a.q)}, {"limit", a.limit}, {"max_gap", a.max_gap}, {"pairs", rows}});
}

void cmd_scan(const Args& a, Emitter& e) {
  const ModulusPlan plan = toy_plan(a);
  const u64 N = need(a.N, "--N");
  if (a.windows) {
    if (e.csv()) e.header({"n", "A_count", "B_count", "p_r", "p_r1", "gap"});
    json rows = json::array();
    for (u64 n = N + 1; n <= 2 * N; ++n) {
      const IntervalScan s = scan_interval(plan, n);
      if (e.csv()) {
        e.row({fmt(n), fmt(s.A_count), fmt(s.B_count), s.pair ? fmt(s.pair->first) : "",
               s.pair ? fmt(s.pair->second) : "", s.gap ? fmt(*s.gap) : ""});
      } else {
        json r{{"n", n}, {"A_count", s.A_count}, {"B_count", s.B_count}};
        r["pair"] = s.pair ? json::array({s.pair->first, s.pair->second}) : json(nullptr);
        rows.push_back(r);
      }
    }
    if (!e.csv()) e.document({{"N", N}, {"windows", rows}});
    return;
  }
  const GpyConfig g = gpy_config(a, N, a.shifts.size());
  const GoodCount c = count_good_n(plan, N, a.shifts, g.R, g.ell);
  if (e.csv()) {
    e.header({"N", "count", "pigeonhole_count", "L_measured", "sum_lambda4", "cs_bound"});
    e.row({fmt(c.N), fmt(c.count), fmt(c.pigeonhole_count), a.shifts.empty() ? "" : fmt(c.L_measured),
           a.shifts.empty() ? "" : fmt(c.sum_lambda4), c.cs_bound ? fmt(*c.cs_bound) : ""});
    return;
  }
  json j{{"N", c.N}, {"count", c.count}, {"pigeonhole_count", c.pigeonhole_count}};
  if (!a.shifts.empty()) {
    j["L_measured"] = num(c.L_measured);
    j["sum_lambda4"] = num(c.sum_lambda4);
  }
  j["cs_bound"] = c.cs_bound ? num(*c.cs_bound) : json(nullptr);
  e.document(j);
}

void cmd_report(const Args& a, Emitter& e) {
  const double H = need(a.H, "--H");
  const ModulusPlan plan = shiu_plan(a, H);
  const ClassBalance lem = class_balance(plan);
  json j;
  j["plan"] = plan_json(plan, lem.S_count, lem.T_count);
  j["class_balance"] = to_json(lem);
  if (a.all) {
    u64 toyQ = a.toy_Q.value_or(0);
    if (toyQ == 0) {
      toyQ = a.q;
      for (u64 p : {2, 3, 5, 7}) {
        if (a.q % p != 0) toyQ *= p;
      }
    }
    const ModulusPlan toy = make_explicit_plan(a.q, a.a, a.toy_H, toyQ, a.p0.value_or(1));
    std::vector<u64> shifts = a.shifts;
    if (shifts.empty()) {
      const ResidueSets sets = residue_sets(toy);
      for (u64 h : sets.S) {
        if (static_cast<int>(shifts.size()) == a.k) break;
        shifts.push_back(h);
      }
      if (static_cast<int>(shifts.size()) < a.k) throw DomainError("toy plan has fewer than k admissible shifts");
    }
    const u64 N = a.N.value_or(10'000);
    j["functional"] = to_json(L_functional(toy, shifts, gpy_config(a, N, shifts.size())));
  }
  e.document(j);
}

using Handler = void (*)(const Args&, Emitter&);

struct Built {
  std::unique_ptr<CLI::App> app;
  std::vector<std::pair<CLI::App*, Handler>> subs;
};

Built build_app(Args& a) {
  Built b;
  b.app = std::make_unique<CLI::App>("Consecutive primes in a residue class: sieve, smooth numbers, GPY weights",
                                     kToolName);
  CLI::App& app = *b.app;
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", a.config_path, "flat key=value file; flags override it");
  app.add_option("--format", a.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", a.out, "output file (default stdout)");
  app.add_option("--cache", a.cache, "prime cache file");
  app.add_option("--memory-budget", a.memory_budget_gib, "sieve memory budget, GiB");
  app.add_option("--seed", a.seed, "Monte Carlo seed");
  app.add_option("--samples", a.samples, "Monte Carlo sample count");
  app.add_option("--c", a.c, "constant in log Q <= c H/(log H)^2");
  app.add_option("--c-q", a.c_q, "c(q) in eps' = c(q) eps / 10");
  app.add_option("--A", a.A, "sweep exponent: H in [X/(log X)^A, X]");
  app.add_option("--rho-step", a.rho_step, "default rho grid step");

  auto sub = [&](const char* name, const char* help, Handler h) {
    CLI::App* s = app.add_subcommand(name, help);
    b.subs.emplace_back(s, h);
    return s;
  };
  auto plan_opts = [&](CLI::App* s) {
    s->add_option("--q", a.q, "modulus q");
    s->add_option("--a", a.a, "residue a");
    s->add_option("--H", a.H, "window length H");
    s->add_option("--Q", a.Q, "explicit modulus Q (toy plan)");
    s->add_option("--p0", a.p0, "injected exceptional prime");
    s->add_option("--plan", a.plan_file, "plan JSON from build-q");
  };
  auto gpy_opts = [&](CLI::App* s) {
    s->add_option("--shifts", a.shifts, "h_1,...,h_k")->delimiter(',');
    s->add_option("--N", a.N, "sum over N < n <= 2N");
    s->add_option("--R", a.R, "truncation level R");
    s->add_option("--eps-prime", a.eps_prime, "R = N^(1/4 - eps')");
    s->add_option("--epsilon", a.epsilon, "eps, used for the default eps'");
    s->add_option("--ell", a.ell, "l (default floor(sqrt k))");
    s->add_flag("--exact", a.exact, "never sample");
  };

  CLI::App* s = sub("sieve", "prime table up to a limit", cmd_sieve);
  s->add_option("--limit", a.limit, "upper limit");
  s->add_flag("--list", a.list, "list every prime");

  s = sub("rho", "Dickman rho on a grid", cmd_rho);
  s->add_option("--u-max", a.u_max, "largest u");
  s->add_option("--step", a.step, "grid step (<= 1/256)");

  s = sub("psi", "exact Psi(x, y) against x rho(u)", cmd_psi);
  s->add_option("--x", a.x, "x");
  s->add_option("--y", a.y, "y");

  s = sub("smoothsum", "restricted smooth reciprocal sums", cmd_smoothsum);
  s->add_option("--x", a.x, "x");
  s->add_option("--y", a.y, "y");
  s->add_option("--q", a.smooth_q, "restrict to primes = 1 mod q (0: all primes)");
  s->add_option("--x-cut", a.x_cut, "tail mode: sum over x < n <= x_cut");

  s = sub("build-q", "build the modulus plan", cmd_build_q);
  plan_opts(s);

  s = sub("sweep-q", "H sweep of |S|, |T| ratios", cmd_sweep_q);
  plan_opts(s);
  s->add_option("--X", a.X, "top of the sweep");
  s->add_option("--points", a.points, "grid points");

  s = sub("weights", "Lambda_R(n) for n in [lo, hi]", cmd_weights);
  plan_opts(s);
  s->add_option("--shifts", a.shifts, "h_1,...,h_k")->delimiter(',');
  s->add_option("--R", a.R, "truncation level R");
  s->add_option("--j", a.j, "power j");
  s->add_option("--lo", a.lo, "first n");
  s->add_option("--hi", a.hi, "last n");
  s->add_option("--form", a.form, "divisor, residue or both");

  s = sub("moments", "second and theta-weighted moments", cmd_moments);
  plan_opts(s);
  gpy_opts(s);
  s->add_option("--theta-h", a.hs, "h values for theta moments (default S and T)")->delimiter(',');
  s->add_option("--trace", a.trace, "per-n CSV of Lambda_R(n) and theta(Qn + h)");

  s = sub("functional", "the positivity functional and its parts", cmd_functional);
  plan_opts(s);
  gpy_opts(s);

  s = sub("bv-sum", "sum of E*(3QN, QD) over D <= D_max", cmd_bv_sum);
  plan_opts(s);
  s->add_option("--N", a.N, "N");
  s->add_option("--D-max", a.D_max, "largest D");

  s = sub("hunt", "consecutive prime pairs in a residue class", cmd_hunt);
  s->add_option("--q", a.q, "modulus q");
  s->add_option("--a", a.a, "residue a");
  s->add_option("--limit", a.limit, "upper limit");
  s->add_option("--max-gap", a.max_gap, "largest gap reported");
  s->add_flag("--stats", a.stats, "gap histogram and cumulative counts instead of pairs");
  s->add_option("--grid", a.grid, "cumulative grid points");
  s->add_option("--gap-epsilon", a.gap_epsilon, "also count gaps < eps log p");

  s = sub("scan", "windows (Qn, Qn+H] over N < n <= 2N", cmd_scan);
  plan_opts(s);
  gpy_opts(s);
  s->add_flag("--windows", a.windows, "one row per window");

  s = sub("report", "plan, |S|/|T| report and functional as one JSON", cmd_report);
  plan_opts(s);
  gpy_opts(s);
  s->add_flag("--all", a.all, "include the functional on a toy plan");
  s->add_option("--k", a.k, "tuple size for the toy functional");
  s->add_option("--toy-Q", a.toy_Q, "toy modulus (default q times the primes <= 7)");
  s->add_option("--toy-H", a.toy_H, "toy window length");
  return b;
}

std::vector<const char*> c_args(const std::vector<std::string>& args) {
  std::vector<const char*> v{kToolName};
  for (const auto& s : args) v.push_back(s.c_str());
  return v;
}

CLI::App* selected(const Built& b) {
  for (const auto& [s, h] : b.subs) {
    if (s->parsed()) return s;
  }
  return nullptr;
}

Handler handler_of(const Built& b, const CLI::App* s) {
  for (const auto& [sub, h] : b.subs) {
    if (sub == s) return h;
  }
  return nullptr;
}

std::string canonical(const CLI::App& app, const CLI::App& sub) {
  std::vector<std::string> lines;
  for (const CLI::App* level : {&app, &sub}) {
    for (const CLI::Option* o : level->get_options()) {
      const std::string name = o->get_name();
      if (name == "--help" || name == "--config" || name == "--out") continue;
      std::string value;
      if (o->count() > 0) {
        for (const auto& r : o->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = o->get_default_str();
      }
      lines.push_back(name + "=" + value);
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string text = sub.get_name();
  for (const auto& l : lines) text += "\n" + l;
  return text;
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read config file " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string plan_to_json(const ModulusPlan& plan, u64 S_count, u64 T_count) {
  return plan_json(plan, S_count, T_count).dump(2);
}

ModulusPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    if (j.contains("result")) j = j["result"];
    if (j.contains("plan")) j = j["plan"];
    std::vector<PrimePower> factors;
    for (const auto& f : j.at("factors")) factors.push_back({f.at(0).get<u64>(), f.at(1).get<int>()});
    ModulusPlan p;
    p.q = j.at("q").get<u64>();
    p.a = j.at("a").get<u64>();
    p.H = j.at("H").get<double>();
    if (!j.at("t_H").is_null()) p.t_H = j.at("t_H").get<double>();
    p.p0 = j.at("p0").get<u64>();
    p.c = j.value("c", kDefaultPlanC);
    p.explicit_modulus = j.value("explicit", true);
    p.Q = FactoredModulus(std::move(factors));
    p.Q_tilde = p.p0 == 1 ? p.Q : p.Q.times_prime(p.p0);
    p.phi_ratio = p.Q.phi_ratio();
    p.log_Q_margin = j.value("log_Q_margin", 0.0);
    if (p.q < 1 || p.Q.mod(p.q) != 0) throw DomainError("plan: q must divide Q");
    return p;
  } catch (const json::exception& ex) {
    throw DomainError(std::string("bad plan JSON: ") + ex.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> full = args;
  Args a;
  Built b = build_app(a);
  try {
    auto argv = c_args(full);
    b.app->parse(static_cast<int>(argv.size()), argv.data());
    if (!a.config_path.empty()) {
      const auto cfg = read_config_file(a.config_path);
      CLI::App* sub = selected(b);
      std::vector<std::string> extra;
      for (const auto& [key, value] : cfg) {
        const std::string flag = "--" + key;
        const CLI::Option* o = sub->get_option_no_throw(flag);
        if (!o) o = b.app->get_option_no_throw(flag);
        if (!o || o->count() > 0 || key == "config") continue;
        if (o->get_expected_min() == 0) {
          if (value == "true" || value == "1") extra.push_back(flag);
        } else {
          extra.push_back(flag);
          extra.push_back(value);
        }
      }
      full.insert(full.end(), extra.begin(), extra.end());
      a = Args{};
      b = build_app(a);
      argv = c_args(full);
      b.app->parse(static_cast<int>(argv.size()), argv.data());
    }
  } catch (const CLI::CallForHelp&) {
    out << b.app->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << b.app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << kToolName << ": " << ex.what() << "\n" << b.app->help();
    return kExitUsage;
  } catch (const DomainError& ex) {
    err << kToolName << ": " << ex.what() << "\n";
    return kExitDomain;
  }

  CLI::App* sub = selected(b);
  const std::uint64_t hash = fnv1a(canonical(*b.app, *sub));
  try {
    std::ofstream file;
    if (!a.out.empty()) {
      file.open(a.out, std::ios::binary | std::ios::trunc);
      if (!file) throw ResourceError("cannot open " + a.out);
    }
    std::ostream& os = a.out.empty() ? out : file;
    Emitter e(os, sub->get_name() == "report" ? "json" : a.format, sub->get_name(), hash);
    handler_of(b, sub)(a, e);
    os.flush();
    if (!os) throw ResourceError("write failed");
  } catch (const UsageError& ex) {
    err << kToolName << " " << sub->get_name() << ": " << ex.what() << "\n" << sub->help();
    return kExitUsage;
  } catch (const DomainError& ex) {
    err << kToolName << ": " << ex.what() << "\n";
    return kExitDomain;
  } catch (const ResourceError& ex) {
    err << kToolName << ": " << ex.what() << "\n";
    return kExitResource;
  } catch (const std::bad_alloc&) {
    err << kToolName << ": out of memory\n";
    return kExitResource;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace apgaps::cli
