#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dc/engine.hpp"
#include "dc/models.hpp"
#include "dc/moments.hpp"
#include "dc/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dc;

namespace {

const ModelSpec kBs = ModelSpec::black_scholes(0.03, 0.25);
constexpr double kDt = 1.0 / 32.0;

MomentMatrix reference_matrix(const ModelSpec& model, int n) {
  ChebGrid grid = build_grid(domain_rule(model, 100.0, 100.0, 100.0, 1.0), n);
  return gamma_closed_form(model, grid, kDt);
}

}  // namespace

TEST_CASE("domain rule covers the strike band and the diffusion band") {
  Domain d = domain_rule(kBs, 100.0, 100.0, 100.0, 1.0);
  REQUIRE(d.dims() == 1);
  // 5 sigma sqrt(T) around the drifted log-spot dominates the strike band here.
  const double mu = std::log(100.0) + (0.03 - 0.25 * 0.25 / 2.0);
  CHECK(d.lo[0] == doctest::Approx(mu - 5.0 * 0.25).epsilon(1e-12));
  CHECK(d.hi[0] == doctest::Approx(mu + 5.0 * 0.25).epsilon(1e-12));
  CHECK(d.lo[0] == doctest::Approx(3.35392).epsilon(1e-5));
  CHECK(d.hi[0] == doctest::Approx(5.85392).epsilon(1e-5));
  // A wide strike range takes over the bounds.
  Domain wide = domain_rule(kBs, 100.0, 20.0, 500.0, 1.0);
  CHECK(wide.lo[0] == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(wide.hi[0] == doctest::Approx(std::log(1000.0) + 0.03).epsilon(1e-12));
}

TEST_CASE("one backstep of a constant terminal value is the discounted mass") {
  MomentMatrix m = reference_matrix(kBs, 12);
  const int np = 13;
  ExerciseProblem problem;
  problem.payoff = [](double, double) { return 1.0; };
  problem.combiner = [](double, double cont) { return cont; };
  problem.discount = std::exp(-0.03 * kDt);
  problem.times = {0.0, kDt};
  problem.domain = m.grid.domain;
  ValueFunctionSeries series = backward_induction(m, problem);
  REQUIRE(series.values.size() == 2);
  REQUIRE(series.node_values[0].size() == static_cast<std::size_t>(np));
  // Terminal fit of the constant has coefficients (1, 0, ..., 0), so the
  // continuation at node k is exactly discount * Gamma[0][k].
  for (int k = 0; k < np; ++k) {
    CHECK(series.node_values[0][k] ==
          doctest::Approx(problem.discount * m.at(0, k)).epsilon(1e-13));
    CHECK(series.node_values[1][k] == 1.0);
  }
}

TEST_CASE("linear terminal value reproduces the drifted expectation") {
  MomentMatrix m = reference_matrix(kBs, 12);
  ExerciseProblem problem;
  problem.payoff = [](double, double x) { return x; };
  problem.combiner = [](double, double cont) { return cont; };
  problem.discount = 1.0;
  problem.times = {0.0, kDt};
  problem.domain = m.grid.domain;
  ValueFunctionSeries series = backward_induction(m, problem);
  // E[X | x_k] = x_k + drift dt, up to domain truncation, which is negligible
  // away from the boundary nodes.
  for (int k = 3; k <= 9; ++k) {
    const double xk = m.grid.nodes[0][k];
    CHECK(series.node_values[0][k] ==
          doctest::Approx(xk + kBs.log_drift() * kDt).epsilon(1e-11));
  }
}

TEST_CASE("American equals European at zero rate") {
  const ModelSpec bs0 = ModelSpec::black_scholes(0.0, 0.25);
  ChebGrid grid = build_grid(domain_rule(bs0, 100.0, 100.0, 100.0, 1.0), 120);
  MomentMatrix m = gamma_closed_form(bs0, grid, kDt);
  AmericanPutResult res = american_put(m, bs0, 100.0, 1.0, 32, {90.0, 100.0, 115.0});
  REQUIRE(res.quotes.size() == 3);
  CHECK(res.smoothing_applied);
  CHECK(res.tail_applied);
  const double s0s[] = {90.0, 100.0, 115.0};
  for (int i = 0; i < 3; ++i) {
    PutQuote euro = european_put(bs0, s0s[i], 100.0, 1.0);
    CHECK(res.quotes[i].price == doctest::Approx(euro.price).epsilon(2e-6));
    CHECK(res.quotes[i].delta == doctest::Approx(euro.delta).epsilon(2e-4));
    CHECK(std::fabs(res.quotes[i].gamma - euro.gamma) < 2e-4);
  }
}

TEST_CASE("American put dominates European and intrinsic value") {
  MomentMatrix m = reference_matrix(kBs, 150);
  AmericanPutResult res = american_put(m, kBs, 100.0, 1.0, 32, {80.0, 100.0, 120.0});
  const double s0s[] = {80.0, 100.0, 120.0};
  for (int i = 0; i < 3; ++i) {
    const double euro = european_put(kBs, s0s[i], 100.0, 1.0).price;
    CHECK(res.quotes[i].price >= euro - 1e-9);
    CHECK(res.quotes[i].price >= std::max(100.0 - s0s[i], 0.0) - 1e-9);
    CHECK(res.quotes[i].price <= 100.0);
    CHECK(res.quotes[i].delta < 0.05);
  }
  CHECK(res.online_seconds >= 0.0);
}

TEST_CASE("pricing is deterministic across parallel modes and repeat calls") {
  MomentMatrix m = reference_matrix(kBs, 100);
  AmericanPutResult a = american_put(m, kBs, 100.0, 1.0, 32, {95.0, 105.0});
  set_parallel_enabled(false);
  AmericanPutResult b = american_put(m, kBs, 100.0, 1.0, 32, {95.0, 105.0});
  set_parallel_enabled(true);
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  AmericanPutResult c = american_put(m, kBs, 100.0, 1.0, 32, {95.0, 105.0});
  omp_set_num_threads(saved);
#else
  AmericanPutResult c = american_put(m, kBs, 100.0, 1.0, 32, {95.0, 105.0});
#endif
  for (int i = 0; i < 2; ++i) {
    CHECK(a.quotes[i].price == b.quotes[i].price);
    CHECK(a.quotes[i].price == c.quotes[i].price);
    CHECK(a.quotes[i].delta == b.quotes[i].delta);
    CHECK(a.quotes[i].gamma == b.quotes[i].gamma);
  }
}

TEST_CASE("surface snapshots equal per-maturity pricing bit for bit") {
  MomentMatrix m = reference_matrix(kBs, 100);
  const std::vector<double> strikes = {90.0, 100.0, 110.0};
  const std::vector<double> mats = {0.25, 0.5, 1.0};
  PriceSurface surf = price_surface(m, kBs, strikes, mats, 32, 100.0);
  REQUIRE(surf.cells.size() == 9);
  for (std::size_t si = 0; si < strikes.size(); ++si) {
    for (std::size_t ti = 0; ti < mats.size(); ++ti) {
      const int n = static_cast<int>(std::lround(mats[ti] * 32.0));
      AmericanPutResult one = american_put(m, kBs, strikes[si], mats[ti], n, {100.0});
      const SurfaceCell& cell = surf.at(si, ti);
      CHECK(cell.price == one.quotes[0].price);
      CHECK(cell.delta == one.quotes[0].delta);
      CHECK(cell.gamma == one.quotes[0].gamma);
    }
  }
  CHECK(surf.grid_n == 100);
  // N = 100 puts the closed-form route into its hybrid regime.
  CHECK(surf.backend_tag == "closed_form+quadrature");
}

TEST_CASE("surface prices are monotone in strike and maturity") {
  MomentMatrix m = reference_matrix(kBs, 150);
  std::vector<double> strikes, mats;
  for (int i = 0; i < 5; ++i) strikes.push_back(85.0 + 7.5 * i);
  for (int i = 1; i <= 8; ++i) mats.push_back(i / 8.0);
  PriceSurface surf = price_surface(m, kBs, strikes, mats, 32, 100.0);
  for (std::size_t si = 0; si < strikes.size(); ++si) {
    for (std::size_t ti = 0; ti < mats.size(); ++ti) {
      if (si > 0) CHECK(surf.at(si, ti).price > surf.at(si - 1, ti).price);
      if (ti > 0) CHECK(surf.at(si, ti).price >= surf.at(si, ti - 1).price - 1e-9);
    }
  }
}

TEST_CASE("surface pricing is identical with parallelism disabled") {
  MomentMatrix m = reference_matrix(kBs, 80);
  const std::vector<double> strikes = {90.0, 100.0, 110.0};
  const std::vector<double> mats = {0.5, 1.0};
  PriceSurface par = price_surface(m, kBs, strikes, mats, 32, 100.0);
  set_parallel_enabled(false);
  PriceSurface ser = price_surface(m, kBs, strikes, mats, 32, 100.0);
  set_parallel_enabled(true);
  for (std::size_t i = 0; i < par.cells.size(); ++i) {
    CHECK(par.cells[i].price == ser.cells[i].price);
    CHECK(par.cells[i].delta == ser.cells[i].delta);
    CHECK(par.cells[i].gamma == ser.cells[i].gamma);
  }
}

TEST_CASE("tail correction contributes at the lower boundary") {
  MomentMatrix m = reference_matrix(kBs, 100);
  AmericanPutFlags no_tail;
  no_tail.use_tail_correction = false;
  AmericanPutResult with_tail = american_put(m, kBs, 100.0, 1.0, 32, {100.0});
  AmericanPutResult without = american_put(m, kBs, 100.0, 1.0, 32, {100.0}, no_tail);
  CHECK(with_tail.tail_applied);
  CHECK_FALSE(without.tail_applied);
  CHECK(with_tail.tail_magnitude > 1.0);
  CHECK(without.tail_magnitude == 0.0);
  // At the money the correction changes the price a little; the put value
  // without the exit mass is too low.
  CHECK(with_tail.quotes[0].price >= without.quotes[0].price - 1e-12);
}

TEST_CASE("problem validation rejects inconsistent setups") {
  MomentMatrix m = reference_matrix(kBs, 20);
  ExerciseProblem p;
  p.payoff = [](double, double x) { return x; };
  p.combiner = [](double g, double c) { return std::max(g, c); };
  p.domain = m.grid.domain;
  p.times = {0.0};  // too short
  CHECK_THROWS_AS(backward_induction(m, p), std::invalid_argument);
  p.times = {0.0, 2.0 * kDt};  // step mismatch with gamma.dt
  CHECK_THROWS_AS(backward_induction(m, p), std::invalid_argument);
  p.times = {0.0, kDt};
  p.payoff = nullptr;
  CHECK_THROWS_AS(backward_induction(m, p), std::invalid_argument);
  p.payoff = [](double, double x) { return x; };
  p.use_tail_correction = true;  // but no tail vector of grid size
  CHECK_THROWS_AS(backward_induction(m, p), std::invalid_argument);
}

TEST_CASE("american_put validates spot, maturity and steps") {
  MomentMatrix m = reference_matrix(kBs, 20);
  // Spot outside the interpolation domain.
  CHECK_THROWS_AS(american_put(m, kBs, 100.0, 1.0, 32, {1.0}), std::invalid_argument);
  // Maturity not equal to n dt.
  CHECK_THROWS_AS(american_put(m, kBs, 100.0, 0.9, 32, {100.0}), std::invalid_argument);
  CHECK_THROWS_AS(american_put(m, kBs, -5.0, 1.0, 32, {100.0}), std::invalid_argument);
  // Surface: maturities must be multiples of the step.
  std::vector<double> strikes = {100.0};
  std::vector<double> bad_mats = {1.0 / 48.0};
  CHECK_THROWS_AS(price_surface(m, kBs, strikes, bad_mats, 32, 100.0),
                  std::invalid_argument);
  std::vector<double> bad_strikes = {-100.0};
  std::vector<double> mats = {0.5};
  CHECK_THROWS_AS(price_surface(m, kBs, bad_strikes, mats, 32, 100.0),
                  std::invalid_argument);
}

TEST_CASE("per-step matrices accept step-dependent dynamics") {
  MomentMatrix m = reference_matrix(kBs, 24);
  ExerciseProblem p;
  p.payoff = [](double, double x) { return std::max(100.0 - std::exp(x), 0.0); };
  p.combiner = [](double g, double c) { return std::max(g, c); };
  p.discount = std::exp(-0.03 * kDt);
  p.times = {0.0, kDt, 2.0 * kDt};
  p.domain = m.grid.domain;
  std::vector<const MomentMatrix*> steps = {&m, &m};
  ValueFunctionSeries a = backward_induction(steps, p);
  ValueFunctionSeries b = backward_induction(m, p);
  REQUIRE(a.node_values.size() == b.node_values.size());
  for (std::size_t u = 0; u < a.node_values.size(); ++u)
    CHECK(a.node_values[u] == b.node_values[u]);
  // Wrong number of step matrices.
  std::vector<const MomentMatrix*> wrong = {&m};
  CHECK_THROWS_AS(backward_induction(wrong, p), std::invalid_argument);
}
