#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dc/chebyshev.hpp"

using namespace dc;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("unit map endpoints and round trip") {
  CHECK(from_unit(2.0, 5.0, 1.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(from_unit(2.0, 5.0, -1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(from_unit(2.0, 5.0, 0.0) == doctest::Approx(3.5).epsilon(1e-15));
  for (double x : {2.0, 2.3, 3.7, 4.999, 5.0}) {
    CHECK(from_unit(2.0, 5.0, to_unit(2.0, 5.0, x)) == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK(to_unit(-1.0, 1.0, 0.25) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(Domain(1.0, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2.0, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Domain({}, {}).validate(), std::invalid_argument);
  Domain d(0.0, 1.0);
  d.validate();
  const double in[] = {0.5};
  const double out[] = {1.5};
  CHECK(d.contains(in));
  CHECK_FALSE(d.contains(out));
  CHECK(d.contains(out, 0.6));
}

TEST_CASE("grid nodes are descending Chebyshev-Lobatto points") {
  const int n = 8;
  ChebGrid g = build_grid(Domain(-2.0, 3.0), n);
  REQUIRE(g.dims() == 1);
  REQUIRE(g.nodes[0].size() == static_cast<std::size_t>(n + 1));
  CHECK(g.point_count() == static_cast<std::size_t>(n + 1));
  CHECK(g.nodes[0].front() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(g.nodes[0].back() == doctest::Approx(-2.0).epsilon(1e-15));
  for (int k = 0; k <= n; ++k) {
    const double unit = std::cos(kPi * k / n);
    CHECK(g.unit_nodes[0][k] == doctest::Approx(unit).epsilon(1e-15));
    CHECK(g.nodes[0][k] == doctest::Approx(from_unit(-2.0, 3.0, unit)).epsilon(1e-15));
    if (k > 0) CHECK(g.nodes[0][k] < g.nodes[0][k - 1]);
  }
}

TEST_CASE("2D grid flattening is row-major with dimension 0 slowest") {
  ChebGrid g = build_grid(Domain({0.0, -1.0}, {1.0, 2.0}), std::vector<int>{2, 3});
  REQUIRE(g.point_count() == 12);
  // flat = i0 * 4 + i1
  std::vector<double> p = g.point(5);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == doctest::Approx(g.nodes[0][1]).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(g.nodes[1][1]).epsilon(1e-15));
}

TEST_CASE("cheb_t_values matches the trigonometric identity") {
  std::vector<double> t(9);
  for (double z : {-1.0, -0.62, 0.0, 0.31, 0.97, 1.0}) {
    cheb_t_values(8, z, t.data());
    for (int j = 0; j <= 8; ++j) {
      CHECK(t[j] == doctest::Approx(std::cos(j * std::acos(z))).epsilon(1e-13));
    }
  }
}

TEST_CASE("clenshaw handles arguments beyond the unit interval") {
  // T_2(z) = 2 z^2 - 1 holds for every z.
  const std::vector<double> c = {0.0, 0.0, 1.0};
  CHECK(clenshaw(c, 2.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(clenshaw(c, -1.5) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("fit reproduces Chebyshev basis coefficients") {
  const int n = 6;
  ChebGrid g = build_grid(Domain(-1.0, 1.0), n);
  for (int j = 0; j <= n; ++j) {
    std::vector<double> values(n + 1);
    for (int k = 0; k <= n; ++k)
      values[k] = std::cos(j * std::acos(g.unit_nodes[0][k]));
    Interpolant ip = fit(g, values);
    for (int m = 0; m <= n; ++m) {
      CHECK(ip.coeff[m] == doctest::Approx(m == j ? 1.0 : 0.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("fit is exact for polynomials up to the grid degree") {
  auto poly = [](double x) { return ((2.0 * x - 1.0) * x + 3.0) * x - 0.7; };
  ChebGrid g = build_grid(Domain(0.5, 4.0), 3);
  std::vector<double> values;
  for (int k = 0; k <= 3; ++k) values.push_back(poly(g.nodes[0][k]));
  Interpolant ip = fit(g, values);
  for (double x : {0.5, 0.9, 1.7, 2.46, 3.9, 4.0}) {
    CHECK(ip.evaluate(x) == doctest::Approx(poly(x)).epsilon(1e-12));
  }
}

TEST_CASE("fit converges geometrically for exp on a wide interval") {
  const Domain dom(-1.0, 3.0);
  double prev = 1e300;
  for (int n : {4, 8, 16, 32}) {
    ChebGrid g = build_grid(dom, n);
    std::vector<double> values;
    for (double x : g.nodes[0]) values.push_back(std::exp(x));
    Interpolant ip = fit(g, values);
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = -1.0 + 4.0 * i / 400.0;
      worst = std::max(worst, std::fabs(ip.evaluate(x) - std::exp(x)));
    }
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("fit_matrix_1d agrees with fit") {
  const int n = 7;
  ChebGrid g = build_grid(Domain(-1.0, 1.0), n);
  std::vector<double> values;
  for (int k = 0; k <= n; ++k) values.push_back(std::sin(3.0 * g.nodes[0][k]) + 0.2 * k);
  Interpolant ip = fit(g, values);
  const std::vector<double> f = fit_matrix_1d(n);
  REQUIRE(f.size() == static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) acc += f[j * (n + 1) + k] * values[k];
    CHECK(acc == doctest::Approx(ip.coeff[j]).epsilon(1e-12));
  }
}

TEST_CASE("tensor fit on a 2D polynomial") {
  auto f = [](double x, double y) { return x * x * y + 2.0 * y - 1.0; };
  ChebGrid g = build_grid(Domain({0.0, -1.0}, {1.0, 2.0}), std::vector<int>{3, 2});
  std::vector<double> values;
  for (std::size_t flat = 0; flat < g.point_count(); ++flat) {
    std::vector<double> p = g.point(flat);
    values.push_back(f(p[0], p[1]));
  }
  Interpolant ip = fit(g, values);
  for (double x : {0.0, 0.33, 0.8}) {
    for (double y : {-1.0, 0.4, 1.9}) {
      const double pt[] = {x, y};
      CHECK(ip.evaluate(pt) == doctest::Approx(f(x, y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("differentiate produces first and second derivatives") {
  ChebGrid g = build_grid(Domain(0.0, 2.0), 6);
  std::vector<double> values;
  for (double x : g.nodes[0]) values.push_back(x * x * x * x);
  Interpolant ip = fit(g, values);
  Interpolant d1 = differentiate(ip, 1);
  Interpolant d2 = differentiate(ip, 2);
  for (double x : {0.0, 0.37, 1.0, 1.62, 2.0}) {
    CHECK(d1.evaluate(x) == doctest::Approx(4.0 * x * x * x).epsilon(1e-10));
    CHECK(d2.evaluate(x) == doctest::Approx(12.0 * x * x).epsilon(1e-10));
  }
  CHECK_THROWS_AS(differentiate(ip, 3), std::invalid_argument);
  CHECK_THROWS_AS(differentiate(ip, 0), std::invalid_argument);
}

TEST_CASE("differentiate respects the chain rule of the domain map") {
  // On [98, 102], d/dx of x^2 must still be 2x, not scaled unit-derivatives.
  ChebGrid g = build_grid(Domain(98.0, 102.0), 4);
  std::vector<double> values;
  for (double x : g.nodes[0]) values.push_back(x * x);
  Interpolant d1 = differentiate(fit(g, values), 1);
  CHECK(d1.evaluate(100.0) == doctest::Approx(200.0).epsilon(1e-11));
}

TEST_CASE("cheb_to_monomial low-degree rows") {
  CHECK(cheb_to_monomial(0) == std::vector<double>{1.0});
  CHECK(cheb_to_monomial(1) == std::vector<double>{0.0, 1.0});
  CHECK(cheb_to_monomial(2) == std::vector<double>{-1.0, 0.0, 2.0});
  CHECK(cheb_to_monomial(3) == std::vector<double>{0.0, -3.0, 0.0, 4.0});
  CHECK(cheb_to_monomial(5) == std::vector<double>{0.0, 5.0, 0.0, -20.0, 0.0, 16.0});
}

TEST_CASE("cheb_to_monomial evaluates consistently and enforces its cap") {
  // High rows alternate huge coefficients, so Horner runs in quad precision
  // (exactly how the moment code consumes the table); plain double would lose
  // every digit by j = 50.
  for (int j : {7, 20, 50}) {
    const std::vector<double> mono = cheb_to_monomial(j);
    for (double z : {-0.9, -0.2, 0.5, 1.0}) {
      __float128 acc = 0.0;
      for (int i = j; i >= 0; --i) acc = acc * z + mono[i];
      CHECK(static_cast<double>(acc) ==
            doctest::Approx(std::cos(j * std::acos(z))).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(cheb_to_monomial(51), std::invalid_argument);
}

TEST_CASE("build_grid rejects invalid degree") {
  CHECK_THROWS_AS(build_grid(Domain(0.0, 1.0), -3), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(Domain(0.0, 1.0), std::vector<int>{3, 3}),
                  std::invalid_argument);
}
