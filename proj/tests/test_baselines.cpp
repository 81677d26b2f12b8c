#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dc/baselines.hpp"
#include "dc/models.hpp"
#include "dc/parallel.hpp"

using namespace dc;

TEST_CASE("one-level binomial put by hand") {
  // u = e^{0.25}, d = 1/u; the up branch expires worthless.
  CHECK(binomial_american_put(100.0, 100.0, 0.0, 0.25, 1.0, 1) ==
        doctest::Approx(12.4353001771596).epsilon(1e-12));
  CHECK(binomial_american_put(100.0, 100.0, 0.03, 0.25, 1.0, 1) ==
        doctest::Approx(10.7738175236350).epsilon(1e-12));
}

TEST_CASE("binomial American put converges to the European price at zero rate") {
  // Without rates an American put on a martingale is worth its European value.
  const double euro =
      european_put(ModelSpec::black_scholes(0.0, 0.25), 100.0, 100.0, 1.0).price;
  const double tree = binomial_american_put(100.0, 100.0, 0.0, 0.25, 1.0, 20000);
  CHECK(std::fabs(tree - euro) < 5e-4);
}

TEST_CASE("binomial put respects option orderings") {
  const double am = binomial_american_put(100.0, 100.0, 0.05, 0.25, 1.0, 4000);
  const double berm = binomial_american_put(100.0, 100.0, 0.05, 0.25, 1.0, 4000, 125);
  const double euro_only = binomial_american_put(100.0, 100.0, 0.05, 0.25, 1.0, 4000, 4000);
  CHECK(am >= berm);
  CHECK(berm >= euro_only);
  CHECK(am > 100.0 - 100.0);  // positive time value at the money
  // More frequent exercise converges upward.
  const double berm2 = binomial_american_put(100.0, 100.0, 0.05, 0.25, 1.0, 4000, 25);
  CHECK(berm2 >= berm);
}

TEST_CASE("binomial validation") {
  CHECK_THROWS_AS(binomial_american_put(100.0, 100.0, 0.03, 0.25, 1.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(binomial_american_put(100.0, 100.0, 0.03, 0.25, 1.0, 100, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(binomial_american_put(-1.0, 100.0, 0.03, 0.25, 1.0, 100),
                  std::invalid_argument);
}

TEST_CASE("CEV lattice reduces to lognormal dynamics at beta = 2") {
  // With beta = 2 the diffusion is dS = r S dt + sigma S dW.
  const double nr = binomial_american_put_cev(100.0, 100.0, 0.03, 0.25, 2.0, 1.0, 4000);
  const double crr = binomial_american_put(100.0, 100.0, 0.03, 0.25, 1.0, 4000);
  CHECK(std::fabs(nr - crr) < 1e-4);
}

TEST_CASE("CEV lattice is internally converged at beta = 1.5") {
  const double coarse = binomial_american_put_cev(100.0, 100.0, 0.03, 0.25, 1.5, 1.0, 2000);
  const double fine = binomial_american_put_cev(100.0, 100.0, 0.03, 0.25, 1.5, 1.0, 4000);
  CHECK(std::fabs(fine - coarse) < 5e-4);
  CHECK(fine > 0.0);
  CHECK(fine < 100.0);
  CHECK_THROWS_AS(binomial_american_put_cev(100.0, 100.0, 0.03, 0.25, 2.5, 1.0, 100),
                  std::invalid_argument);
}

TEST_CASE("path simulation is deterministic and block-order independent") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PathMatrix a = simulate_paths(bs, 100.0, 1.0, 16, 9000, 4);
  PathMatrix b = simulate_paths(bs, 100.0, 1.0, 16, 9000, 4);
  REQUIRE(a.s.size() == 9000u * 17u);
  CHECK(a.s == b.s);
  set_parallel_enabled(false);
  PathMatrix c = simulate_paths(bs, 100.0, 1.0, 16, 9000, 4);
  set_parallel_enabled(true);
  CHECK(a.s == c.s);
  PathMatrix d = simulate_paths(bs, 100.0, 1.0, 16, 9000, 5);
  CHECK(a.s != d.s);
  for (std::size_t m = 0; m < a.n_paths; ++m) CHECK(a.at(m, 0) == 100.0);
}

TEST_CASE("simulated paths have the lognormal terminal moments") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  const std::size_t m = 100000;
  PathMatrix p = simulate_paths(bs, 100.0, 1.0, 8, m, 21);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += p.at(i, 8);
  mean /= static_cast<double>(m);
  // E[S_T] = S0 e^{rT}; the sample mean has sd ~ S0 sigma / sqrt(M).
  CHECK(std::fabs(mean - 100.0 * std::exp(0.03)) < 5.0 * 100.0 * 0.25 / std::sqrt(double(m)));
}

TEST_CASE("Merton path steps aggregate the jump component") {
  const ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  const std::size_t m = 100000;
  PathMatrix p = simulate_paths(mj, 100.0, 1.0, 4, m, 31);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += p.at(i, 4);
  mean /= static_cast<double>(m);
  // The compensated dynamics keep E[S_T] = S0 e^{rT}.
  CHECK(std::fabs(mean - 100.0 * std::exp(0.03)) < 5.0 * 100.0 * 0.55 / std::sqrt(double(m)));
}

TEST_CASE("CEV paths absorb at zero and stay there") {
  const ModelSpec cev = ModelSpec::cev(0.0, 2.0, 1.5);
  StepSimConfig cfg;
  cfg.n_sub = 4;
  PathMatrix p = simulate_paths(cev, 1.0, 1.0, 8, 4000, 3, cfg);
  std::size_t absorbed = 0;
  bool resurrection = false;
  for (std::size_t m = 0; m < p.n_paths; ++m) {
    bool dead = false;
    for (int u = 0; u <= p.n_steps; ++u) {
      const double s = p.at(m, u);
      CHECK(s >= 0.0);
      if (dead && s != 0.0) resurrection = true;
      if (s == 0.0) dead = true;
    }
    if (dead) ++absorbed;
  }
  CHECK(absorbed > 0);
  CHECK_FALSE(resurrection);
}

TEST_CASE("truncate_paths keeps a prefix and rescales the maturity") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PathMatrix full = simulate_paths(bs, 100.0, 1.0, 12, 500, 8);
  PathMatrix half = truncate_paths(full, 6);
  CHECK(half.n_steps == 6);
  CHECK(half.n_paths == 500);
  CHECK(half.maturity == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t m = 0; m < 500; ++m)
    for (int u = 0; u <= 6; ++u) CHECK(half.at(m, u) == full.at(m, u));
  PathMatrix same = truncate_paths(full, 12);
  CHECK(same.s == full.s);
  CHECK_THROWS_AS(truncate_paths(full, 0), std::invalid_argument);
  CHECK_THROWS_AS(truncate_paths(full, 13), std::invalid_argument);
}

TEST_CASE("regression pricing sits near the exercise-aligned tree value") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PathMatrix p = simulate_paths(bs, 100.0, 1.0, 32, 20000, 7);
  LsmResult lsm = lsm_price(p, 100.0, 0.03);
  const double tree = binomial_american_put(100.0, 100.0, 0.03, 0.25, 1.0, 20000, 625);
  CHECK(lsm.std_error > 0.0);
  CHECK(lsm.std_error < 0.1);
  CHECK(std::fabs(lsm.price - tree) < 4.0 * lsm.std_error);
  CHECK(lsm.dates_without_itm == 0);
  // Deterministic for a fixed path set.
  LsmResult again = lsm_price(p, 100.0, 0.03);
  CHECK(again.price == lsm.price);
  CHECK(again.std_error == lsm.std_error);
}

TEST_CASE("regression pricing stays below the strike and above intrinsic-zero") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PathMatrix p = simulate_paths(bs, 120.0, 0.5, 16, 8000, 12);
  LsmResult lsm = lsm_price(p, 100.0, 0.03, 2);
  CHECK(lsm.price >= 0.0);
  CHECK(lsm.price < 100.0);
}

TEST_CASE("regression pricing validates inputs") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PathMatrix p = simulate_paths(bs, 100.0, 1.0, 8, 100, 1);
  CHECK_THROWS_AS(lsm_price(p, -1.0, 0.03), std::invalid_argument);
  CHECK_THROWS_AS(lsm_price(p, 100.0, 0.03, 0), std::invalid_argument);
  PathMatrix empty;
  CHECK_THROWS_AS(lsm_price(empty, 100.0, 0.03), std::invalid_argument);
}
