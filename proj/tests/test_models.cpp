#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dc/models.hpp"

using namespace dc;

TEST_CASE("model factories and validation") {
  ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  bs.validate();
  CHECK(bs.kind == ModelSpec::Kind::BlackScholes);
  CHECK(bs.has_increment_mixture());
  CHECK(bs.has_characteristic_fn());

  ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  mj.validate();
  CHECK(mj.jump_intensity == 0.4);

  ModelSpec cev = ModelSpec::cev(0.03, 0.25, 1.5);
  cev.validate();
  CHECK_FALSE(cev.has_increment_mixture());
  CHECK_FALSE(cev.has_characteristic_fn());

  CHECK_THROWS_AS(ModelSpec::black_scholes(0.03, -0.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::black_scholes(0.03, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::merton(0.03, 0.25, -1.0, 0.0, 0.1).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::cev(0.03, 0.25, -0.5).validate(), std::invalid_argument);
}

TEST_CASE("risk-neutral log drift") {
  CHECK(ModelSpec::black_scholes(0.03, 0.25).log_drift() ==
        doctest::Approx(-0.0012500000000000011).epsilon(1e-14));
  // Jump compensation: r - sigma^2/2 - lambda (e^{alpha + beta^2/2} - 1).
  CHECK(ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4).log_drift() ==
        doctest::Approx(0.13593127207397732).epsilon(1e-13));
}

TEST_CASE("Black-Scholes increment mixture is a single normal") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  const double x0 = 4.6, dt = 1.0 / 32.0;
  NormalMixture mix = increment_mixture(bs, x0, dt);
  REQUIRE(mix.comp.size() == 1);
  CHECK(mix.comp[0].weight == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mix.comp[0].mean == doctest::Approx(x0 + bs.log_drift() * dt).epsilon(1e-14));
  CHECK(mix.comp[0].stddev == doctest::Approx(0.25 * std::sqrt(dt)).epsilon(1e-14));
  CHECK(mix.truncation_deficit == 0.0);
}

TEST_CASE("Merton increment mixture carries Poisson weights") {
  const ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  const double x0 = 4.6, dt = 1.0 / 32.0;
  NormalMixture mix = increment_mixture(mj, x0, dt);
  REQUIRE(mix.comp.size() >= 3);
  CHECK(mix.comp[0].weight == doctest::Approx(0.9875778004938814).epsilon(1e-13));
  CHECK(mix.comp[1].weight == doctest::Approx(0.012344722506173519).epsilon(1e-13));
  CHECK(mix.comp[2].weight == doctest::Approx(7.715451566358449e-05).epsilon(1e-12));
  double wsum = 0.0;
  for (const auto& c : mix.comp) wsum += c.weight;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(mix.truncation_deficit >= 0.0);
  CHECK(mix.truncation_deficit < kMixtureTailTol);
  // Component j: mean shifts by j alpha, variance gains j beta^2.
  CHECK(mix.comp[1].mean - mix.comp[0].mean == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(mix.comp[1].stddev * mix.comp[1].stddev -
            mix.comp[0].stddev * mix.comp[0].stddev ==
        doctest::Approx(0.16).epsilon(1e-12));
}

TEST_CASE("mixture cdf, pdf and partial expectation against the normal closed forms") {
  NormalMixture mix;
  mix.comp.push_back({1.0, 0.1, 0.5});
  CHECK(mix.cdf(0.1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mix.cdf(0.6) == doctest::Approx(norm_cdf(1.0)).epsilon(1e-14));
  CHECK(mix.pdf(0.6) == doctest::Approx(norm_pdf(1.0) / 0.5).epsilon(1e-13));
  // E[e^X 1{X < x}] = e^{mu + s^2/2} Phi((x - mu - s^2) / s).
  CHECK(mix.partial_exp(0.4) == doctest::Approx(0.676038663454749).epsilon(1e-12));
  CHECK(mix.partial_exp(40.0) ==
        doctest::Approx(std::exp(0.1 + 0.125)).epsilon(1e-12));
  CHECK(mix.partial_exp(-40.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("characteristic function of the increment") {
  const double dt = 0.25;
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  CHECK(std::abs(characteristic_fn(bs, 0.0, dt) - std::complex<double>(1.0, 0.0)) < 1e-14);
  const double z = 1.7;
  const std::complex<double> expect =
      std::exp(std::complex<double>(-0.5 * 0.0625 * dt * z * z, bs.log_drift() * dt * z));
  CHECK(std::abs(characteristic_fn(bs, z, dt) - expect) < 1e-13);

  // Merton: match the mixture representation E[e^{izX}] termwise.
  const ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  NormalMixture mix = increment_mixture(mj, 0.0, dt);
  std::complex<double> acc(0.0, 0.0);
  for (const auto& c : mix.comp) {
    acc += c.weight * std::exp(std::complex<double>(-0.5 * c.stddev * c.stddev * z * z,
                                                    c.mean * z));
  }
  CHECK(std::abs(characteristic_fn(mj, z, dt) - acc) < 1e-11);
  CHECK_THROWS_AS(characteristic_fn(ModelSpec::cev(0.03, 0.25, 1.5), 1.0, dt),
                  std::invalid_argument);
}

TEST_CASE("European put closed forms") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  PutQuote q = european_put(bs, 100.0, 100.0, 1.0);
  CHECK(q.price == doctest::Approx(8.393030179994334).epsilon(1e-12));
  CHECK(q.delta == doctest::Approx(-0.403228215679476).epsilon(1e-10));
  CHECK(q.gamma == doctest::Approx(0.015485876591702).epsilon(1e-10));
  CHECK(european_put(bs, 80.0, 100.0, 1.0).price ==
        doctest::Approx(19.810228575990934).epsilon(1e-12));

  const ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  CHECK(european_put(mj, 100.0, 100.0, 1.0).price ==
        doctest::Approx(13.691306370216322).epsilon(1e-10));

  // Put-call parity via forward: P >= max(K e^{-rT} - S, 0), P <= K e^{-rT}.
  CHECK(q.price < 100.0 * std::exp(-0.03));
  CHECK_THROWS_AS(european_put(ModelSpec::cev(0.03, 0.25, 1.5), 100.0, 100.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("one-step simulation is deterministic in the seed") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  std::vector<double> a = simulate_one_step(bs, 4.6, 0.25, 500, 42);
  std::vector<double> b = simulate_one_step(bs, 4.6, 0.25, 500, 42);
  std::vector<double> c = simulate_one_step(bs, 4.6, 0.25, 500, 43);
  REQUIRE(a.size() == 500);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("one-step simulation has the model's mean and variance") {
  const ModelSpec bs = ModelSpec::black_scholes(0.03, 0.25);
  const double x0 = 4.6, dt = 0.25;
  const std::size_t m = 200000;
  std::vector<double> draws = simulate_one_step(bs, x0, dt, m, 7);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= static_cast<double>(m - 1);
  const double true_mean = x0 + bs.log_drift() * dt;
  const double true_sd = 0.25 * std::sqrt(dt);
  // 5 standard errors.
  CHECK(std::fabs(mean - true_mean) < 5.0 * true_sd / std::sqrt(double(m)));
  CHECK(std::fabs(var - true_sd * true_sd) <
        5.0 * true_sd * true_sd * std::sqrt(2.0 / double(m)));
}

TEST_CASE("Merton one-step simulation matches the mixture mean") {
  const ModelSpec mj = ModelSpec::merton(0.03, 0.25, 0.4, -0.5, 0.4);
  const double x0 = 4.6, dt = 0.25;
  const std::size_t m = 400000;
  std::vector<double> draws = simulate_one_step(mj, x0, dt, m, 11);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(m);
  NormalMixture mix = increment_mixture(mj, x0, dt);
  double mix_mean = 0.0, mix_second = 0.0;
  for (const auto& c : mix.comp) {
    mix_mean += c.weight * c.mean;
    mix_second += c.weight * (c.stddev * c.stddev + c.mean * c.mean);
  }
  const double sd = std::sqrt(mix_second - mix_mean * mix_mean);
  CHECK(std::fabs(mean - mix_mean) < 5.0 * sd / std::sqrt(double(m)));
}

TEST_CASE("CEV one-step simulation reports absorption as -infinity") {
  const ModelSpec cev = ModelSpec::cev(0.0, 2.0, 1.5);
  StepSimConfig cfg;
  cfg.n_sub = 4;
  std::vector<double> draws = simulate_one_step(cev, 0.0, 1.0, 2000, 5, cfg);
  std::size_t absorbed = 0;
  for (double d : draws) {
    if (d == -std::numeric_limits<double>::infinity())
      ++absorbed;
    else
      CHECK(std::isfinite(d));
  }
  CHECK(absorbed > 0);
  CHECK(absorbed < draws.size());
}
