// Times the serial reference sweep against the OpenMP kernel on the fig5b grid
// and checks that both produce the same rows.
//
//   bench_sweep [jobs] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <omp.h>

#include "extrudesim/presets.hpp"
#include "extrudesim/sweep.hpp"

using namespace extrude;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same_rows(const SweepResult& a, const SweepResult& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    for (const auto& m : metric_names()) {
      const double x = metric_value(a.rows[i].metrics, m), y = metric_value(b.rows[i].metrics, m);
      if (!(x == y || (x != x && y != y))) return false;
    }
    if (a.rows[i].status != b.rows[i].status) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int jobs = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  const SweepGrid grid = preset_sweep("fig5b");

  SweepResult serial, parallel;
  const double ts = best_of(repeats, [&] { serial = run_sweep_serial(grid); });
  const double tp = best_of(repeats, [&] { parallel = run_sweep(grid, jobs); });
  const bool equal = same_rows(serial, parallel);

  std::printf("runs=%zu jobs=%d serial=%.3fs parallel=%.3fs speedup=%.2fx results=%s\n",
              serial.rows.size(), jobs, ts, tp, ts / tp, equal ? "identical" : "DIFFERENT");
  return equal ? 0 : 1;
}
