#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "dc/engine.hpp"
#include "dc/kernels.hpp"
#include "dc/models.hpp"
#include "dc/moments.hpp"
#include "dc/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dc;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double median_time(F&& body, int reps = 3) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    body();
    t.push_back(now_s() - t0);
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled\n\n");
#endif

  std::printf("%-34s %12s %12s %9s %12s\n", "kernel", "reference", "optimized", "speedup",
              "max |diff|");

  // Dense matrix-vector product: the backward-induction inner loop.
  for (int np : {201, 401, 601}) {
    std::vector<double> a(static_cast<std::size_t>(np) * np), x(np), y1(np), y2(np);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::sin(0.1 * static_cast<double>(i));
    for (int i = 0; i < np; ++i) x[i] = std::cos(0.2 * i);
    const int inner = std::max(1, 20000000 / (np * np));
    const double t_ref = median_time([&] {
      for (int r = 0; r < inner; ++r) matvec_reference(a.data(), np, np, x.data(), y1.data());
    });
    const double t_opt = median_time([&] {
      for (int r = 0; r < inner; ++r) matvec(a.data(), np, np, x.data(), y2.data());
    });
    char label[64];
    std::snprintf(label, sizeof(label), "matvec %dx%d (x%d)", np, np, inner);
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx %12.2e\n", label, 1e3 * t_ref, 1e3 * t_opt,
                t_ref / t_opt, max_abs_diff(y1, y2));
  }

  // Monte Carlo moment assembly: plain loop vs lane-interleaved recurrence,
  // both serial here (the parallel split is measured below).
  {
    const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
    const Domain dom = domain_rule(bs, 100.0, 100.0, 100.0, 1.0);
    const ChebGrid grid = build_grid(dom, 100);
    set_parallel_enabled(false);
    MomentMatrix ref, opt;
    const double t_ref =
        median_time([&] { ref = gamma_mc_reference(bs, grid, 1.0 / 32.0, 20000, 1); });
    const double t_opt = median_time([&] { opt = gamma_mc(bs, grid, 1.0 / 32.0, 20000, 1); });
    set_parallel_enabled(true);
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx %12.2e\n", "gamma_mc N=100 M=20000",
                1e3 * t_ref, 1e3 * t_opt, t_ref / t_opt, max_abs_diff(ref.gamma, opt.gamma));
  }

  std::printf("\n%-34s %12s %12s %9s %12s\n", "parallel region", "serial", "OpenMP",
              "speedup", "max |diff|");

  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  const Domain dom = domain_rule(bs, 100.0, 100.0, 100.0, 1.0);

  {
    const ChebGrid grid = build_grid(dom, 150);
    MomentMatrix a, b;
    set_parallel_enabled(false);
    const double t_ser = median_time([&] { a = gamma_quadrature(bs, grid, 1.0 / 32.0); });
    set_parallel_enabled(true);
    const double t_par = median_time([&] { b = gamma_quadrature(bs, grid, 1.0 / 32.0); });
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx %12.2e\n", "gamma_quadrature N=150",
                1e3 * t_ser, 1e3 * t_par, t_ser / t_par, max_abs_diff(a.gamma, b.gamma));
  }
  {
    const ChebGrid grid = build_grid(dom, 100);
    MomentMatrix a, b;
    set_parallel_enabled(false);
    const double t_ser = median_time([&] { a = gamma_mc(bs, grid, 1.0 / 32.0, 20000, 1); });
    set_parallel_enabled(true);
    const double t_par = median_time([&] { b = gamma_mc(bs, grid, 1.0 / 32.0, 20000, 1); });
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx %12.2e\n", "gamma_mc N=100 M=20000",
                1e3 * t_ser, 1e3 * t_par, t_ser / t_par, max_abs_diff(a.gamma, b.gamma));
  }
  {
    MomentMatrix g = gamma_closed_form(bs, build_grid(dom, 200), 1.0 / 32.0);
    std::vector<double> strikes;
    for (int i = 0; i < 9; ++i) strikes.push_back(80.0 + 5.0 * i);
    std::vector<double> mats;
    for (int i = 1; i <= 12; ++i) mats.push_back(i / 16.0);
    PriceSurface a, b;
    set_parallel_enabled(false);
    const double t_ser =
        median_time([&] { a = price_surface(g, bs, strikes, mats, 32, 100.0); });
    set_parallel_enabled(true);
    const double t_par =
        median_time([&] { b = price_surface(g, bs, strikes, mats, 32, 100.0); });
    double worst = 0.0;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
      worst = std::max(worst, std::fabs(a.cells[i].price - b.cells[i].price));
    std::printf("%-34s %10.3f ms %10.3f ms %8.2fx %12.2e\n", "price_surface 9x12 N=200",
                1e3 * t_ser, 1e3 * t_par, t_ser / t_par, worst);
  }

  std::printf("\nA reference/optimized or serial/OpenMP max |diff| of 0 means the pair is "
              "bit-identical, which the test suite asserts separately.\n");
  return 0;
}
