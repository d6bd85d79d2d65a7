// Benchmark of the OpenMP-parallel kernels against their serial reference
// implementations. Every kernel is advertised as bitwise identical across
// the two execution modes, so besides the timings this also re-checks that
// claim on the benchmark inputs. Wall-clock medians of repeated runs;
// speedups near 1.0 are expected on single-core machines.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <vector>

#include "lorprod/base_space.hpp"
#include "lorprod/causal_core.hpp"
#include "lorprod/metric_family.hpp"
#include "lorprod/transport_curvature.hpp"

using namespace lorprod;

namespace {

double median_secs(const std::function<void()>& fn, int reps) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %10.4f ms %10.4f ms   x%.2f   %s\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel, identical ? "bitwise-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());
  std::printf("%-28s %13s %13s %7s\n", "kernel", "serial", "parallel", "speedup");

  // Mesh large enough for the kernels to dominate over setup.
  auto g = std::make_shared<BaseSpace>(make_path_graph(401, 1.0));
  auto fam = std::make_shared<ConformalFamily>(ConformalFamily(
      g, {0.0, 1.0}, [](double s, int) { return std::exp(0.5 * s); },
      [](double, int) { return 1.0; }, 0.5, 0.0, true));
  const ProductSpacetime st = ProductSpacetime::uniform(fam, 0.0, 1.0, 200, 2);

  // --- causal mesh construction ------------------------------------------
  const double dag_s = median_secs([&] { (void)build_causal_dag(st, Exec::serial); }, 5);
  const double dag_p = median_secs([&] { (void)build_causal_dag(st, Exec::parallel); }, 5);
  const CausalDag dag_serial = build_causal_dag(st, Exec::serial);
  const CausalDag dag = build_causal_dag(st, Exec::parallel);

  // --- longest-path time-separation table --------------------------------
  const Event source{0, 200};
  const double dp_s =
      median_secs([&] { (void)time_separation_table(dag, source, Exec::serial); }, 5);
  const double dp_p =
      median_secs([&] { (void)time_separation_table(dag, source, Exec::parallel); }, 5);
  const auto table_s = time_separation_table(dag, source, Exec::serial);
  const auto table_p = time_separation_table(dag, source, Exec::parallel);
  const bool dp_same = table_s.tau == table_p.tau && table_s.pred == table_p.pred &&
                       table_s.strict == table_p.strict;

  // The two mesh builds are compared through the tables they produce.
  const auto table_x = time_separation_table(dag_serial, source, Exec::serial);
  const bool dag_same = table_x.tau == table_s.tau && table_x.pred == table_s.pred;

  // --- optimal-transport curvature probes --------------------------------
  std::vector<double> times;
  std::vector<std::vector<double>> dens;
  for (int k = 0; k <= 128; ++k) {
    times.push_back(k / 128.0);
    std::vector<double> rowv;
    for (int x = 0; x < 24; ++x) rowv.push_back(1.0 + 0.25 * std::sin(0.3 * x + times.back()));
    dens.push_back(rowv);
  }
  std::vector<double> mass(24, 1.0);
  const DensityField field(times, dens, mass);
  std::vector<VerticalCase> cases;
  std::vector<int> region;
  for (int x = 0; x < 24; ++x) region.push_back(x);
  for (int k = 0; k < 24; ++k)
    cases.push_back({0.02 + 0.002 * k, 0.3, 0.6, 0.95 - 0.002 * k, region});
  const double probe_s =
      median_secs([&] { (void)wtcd_probe(field, 0.5, 0.0, 2.0, cases, 33, Exec::serial); }, 3);
  const double probe_p =
      median_secs([&] { (void)wtcd_probe(field, 0.5, 0.0, 2.0, cases, 33, Exec::parallel); }, 3);
  const ProbeReport rep_s = wtcd_probe(field, 0.5, 0.0, 2.0, cases, 33, Exec::serial);
  const ProbeReport rep_p = wtcd_probe(field, 0.5, 0.0, 2.0, cases, 33, Exec::parallel);
  bool probe_same = rep_s.all_pass == rep_p.all_pass && rep_s.cases.size() == rep_p.cases.size();
  for (std::size_t k = 0; probe_same && k < rep_s.cases.size(); ++k) {
    probe_same = rep_s.cases[k].verdict.worst_slack == rep_p.cases[k].verdict.worst_slack &&
                 rep_s.cases[k].curve.u == rep_p.cases[k].curve.u;
  }

  row("build_causal_dag", dag_s, dag_p, dag_same);
  row("time_separation_table", dp_s, dp_p, dp_same);
  row("wtcd_probe (24 cases)", probe_s, probe_p, probe_same);

  const bool ok = dag_same && dp_same && probe_same;
  std::printf("%s\n", ok ? "all modes agree" : "serial/parallel DISAGREE");
  return ok ? 0 : 1;
}
