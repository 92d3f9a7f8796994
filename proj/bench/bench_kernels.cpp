// Serial reference vs OpenMP kernels. Usage: bench_kernels [scale]
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "apgaps/modulus.hpp"
#include "apgaps/primes.hpp"
#include "apgaps/tuple_sieve.hpp"

using namespace apgaps;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void line(const char* name, double serial, double parallel, bool same) {
  std::printf("%-14s serial %8.3fs  openmp %8.3fs  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
  std::printf("threads: %d\n", omp_get_max_threads());

  const u64 limit = static_cast<u64>(5e7 * scale);
  std::vector<u64> ref;
  PrimeTable table;
  const double ts = seconds([&] { ref = sieve_serial(limit); });
  const double tp = seconds([&] { table = sieve(limit); });
  line("sieve", ts, tp, ref.size() == table.size());

  const double H = 1e6 * scale;
  const ModulusPlan plan = build_plan(3, 2, H, table);
  ResidueSets a, b;
  const double rs = seconds([&] { a = residue_sets_serial(plan); });
  const double rp = seconds([&] { b = residue_sets(plan); });
  line("residue_sets", rs, rp, a.S == b.S && a.T == b.T);

  const TupleSpec spec = make_tuple_spec(FactoredModulus::of(210), {11, 17, 23}, 30);
  const WeightParams params = make_weight_params(1000.0, 4, spec.Q);
  const WeightKernel kernel(spec, params);
  const u64 n_hi = static_cast<u64>(2e5 * scale);
  std::vector<double> ws, wp;
  const double ks = seconds([&] { ws = kernel.values_serial(1, n_hi); });
  const double kp = seconds([&] { wp = kernel.values(1, n_hi); });
  bool same = ws.size() == wp.size();
  for (std::size_t i = 0; same && i < ws.size(); ++i) same = std::abs(ws[i] - wp[i]) <= 1e-9 * (1 + std::abs(ws[i]));
  line("weights", ks, kp, same);

  const u64 M = limit / 2;
  double es = 0, ep = 0;
  const double xs = seconds([&] { es = e_star_dense(table, M, 30); });
  const double xp = seconds([&] { ep = e_star(table, M, 30); });
  line("e_star", xs, xp, std::abs(es - ep) <= 1e-6 * (1 + es));
  return 0;
}
