#include "dc/chebyshev.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dc {

void Domain::validate() const {
  if (lo.empty() || lo.size() != hi.size())
    throw std::invalid_argument("Domain: lo/hi must be non-empty and of equal length");
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (!(lo[d] < hi[d]) || !std::isfinite(lo[d]) || !std::isfinite(hi[d]))
      throw std::invalid_argument("Domain: requires finite lo < hi in every dimension");
  }
}

bool Domain::contains(std::span<const double> x, double slack) const {
  if (static_cast<int>(x.size()) != dims()) return false;
  for (int d = 0; d < dims(); ++d)
    if (x[d] < lo[d] - slack || x[d] > hi[d] + slack) return false;
  return true;
}

double to_unit(double lo, double hi, double x) { return (2.0 * x - lo - hi) / (hi - lo); }

double from_unit(double lo, double hi, double z) { return hi + 0.5 * (lo - hi) * (1.0 - z); }

std::size_t ChebGrid::point_count() const {
  std::size_t n = 1;
  for (int d : degree) n *= static_cast<std::size_t>(d) + 1;
  return n;
}

std::vector<double> ChebGrid::point(std::size_t flat) const {
  std::vector<double> x(dims());
  for (int d = dims() - 1; d >= 0; --d) {
    std::size_t n = static_cast<std::size_t>(degree[d]) + 1;
    x[d] = nodes[d][flat % n];
    flat /= n;
  }
  return x;
}

ChebGrid build_grid(const Domain& domain, const std::vector<int>& degree) {
  domain.validate();
  if (static_cast<int>(degree.size()) != domain.dims())
    throw std::invalid_argument("build_grid: degree list must match domain dimension");
  ChebGrid g;
  g.domain = domain;
  g.degree = degree;
  g.unit_nodes.resize(degree.size());
  g.nodes.resize(degree.size());
  for (std::size_t d = 0; d < degree.size(); ++d) {
    int n = degree[d];
    if (n < 0) throw std::invalid_argument("build_grid: degree must be >= 0");
    g.unit_nodes[d].resize(n + 1);
    g.nodes[d].resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      double z = (n == 0) ? 1.0 : std::cos(std::numbers::pi * k / n);
      if (k == 0) z = 1.0;
      if (k == n && n > 0) z = -1.0;
      if (2 * k == n) z = 0.0;
      g.unit_nodes[d][k] = z;
      g.nodes[d][k] = from_unit(domain.lo[d], domain.hi[d], z);
    }
  }
  return g;
}

ChebGrid build_grid(const Domain& domain, int degree) {
  return build_grid(domain, std::vector<int>{degree});
}

void cheb_t_values(int n, double z, double* out) {
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = z;
  for (int j = 2; j <= n; ++j) out[j] = 2.0 * z * out[j - 1] - out[j - 2];
}

double clenshaw(std::span<const double> c, double z) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 0) throw std::invalid_argument("clenshaw: empty coefficients");
  if (n == 0) return c[0];
  double b1 = 0.0, b2 = 0.0;
  for (int j = n; j >= 1; --j) {
    double b = c[j] + 2.0 * z * b1 - b2;
    b2 = b1;
    b1 = b;
  }
  return c[0] + z * b1 - b2;
}

std::vector<double> fit_matrix_1d(int degree) {
  if (degree < 0) throw std::invalid_argument("fit_matrix_1d: degree must be >= 0");
  const int n = degree;
  std::vector<double> f(static_cast<std::size_t>(n + 1) * (n + 1));
  if (n == 0) {
    f[0] = 1.0;
    return f;
  }
  // coeff_j = (2^{1{0<j<N}} / N) * sum''_k values_k cos(pi j k / N),
  // where the double prime halves the k = 0 and k = N terms.
  for (int j = 0; j <= n; ++j) {
    double scale = ((j == 0 || j == n) ? 1.0 : 2.0) / n;
    for (int k = 0; k <= n; ++k) {
      long long m = (static_cast<long long>(j) * k) % (2LL * n);
      double t = std::cos(std::numbers::pi * static_cast<double>(m) / n);
      double eta = (k == 0 || k == n) ? 0.5 : 1.0;
      f[static_cast<std::size_t>(j) * (n + 1) + k] = scale * eta * t;
    }
  }
  return f;
}

namespace {

// Apply a dense (n x n) matrix along dimension d of a row-major tensor.
void apply_along_dim(const std::vector<double>& mat, int n, std::vector<double>& data,
                     const std::vector<int>& sizes, int d) {
  std::size_t inner = 1;
  for (std::size_t e = d + 1; e < sizes.size(); ++e) inner *= sizes[e];
  std::size_t outer = data.size() / (inner * n);
  std::vector<double> slice(n), out(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = (o * n) * inner + i;
      for (int k = 0; k < n; ++k) slice[k] = data[base + static_cast<std::size_t>(k) * inner];
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        const double* row = &mat[static_cast<std::size_t>(j) * n];
        for (int k = 0; k < n; ++k) s += row[k] * slice[k];
        out[j] = s;
      }
      for (int j = 0; j < n; ++j) data[base + static_cast<std::size_t>(j) * inner] = out[j];
    }
  }
}

}  // namespace

Interpolant fit(const ChebGrid& grid, std::span<const double> values) {
  if (values.size() != grid.point_count())
    throw std::invalid_argument("fit: values size " + std::to_string(values.size()) +
                                " does not match grid point count " +
                                std::to_string(grid.point_count()));
  Interpolant ip;
  ip.grid = grid;
  ip.coeff.assign(values.begin(), values.end());
  std::vector<int> sizes(grid.dims());
  for (int d = 0; d < grid.dims(); ++d) sizes[d] = grid.degree[d] + 1;
  for (int d = 0; d < grid.dims(); ++d) {
    auto f = fit_matrix_1d(grid.degree[d]);
    apply_along_dim(f, sizes[d], ip.coeff, sizes, d);
  }
  return ip;
}

double Interpolant::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != grid.dims())
    throw std::invalid_argument("Interpolant::evaluate: point dimension mismatch");
  const int dims = grid.dims();
  std::vector<double> z(dims);
  for (int d = 0; d < dims; ++d) z[d] = to_unit(grid.domain.lo[d], grid.domain.hi[d], x[d]);
  // Clenshaw along the last (contiguous) dimension repeatedly.
  std::vector<double> work(coeff.begin(), coeff.end());
  std::size_t rows = work.size();
  for (int d = dims - 1; d >= 1; --d) {
    const std::size_t n = static_cast<std::size_t>(grid.degree[d]) + 1;
    rows /= n;
    for (std::size_t r = 0; r < rows; ++r)
      work[r] = clenshaw(std::span<const double>(&work[r * n], n), z[d]);
    work.resize(rows);
  }
  return clenshaw(std::span<const double>(work.data(), static_cast<std::size_t>(grid.degree[0]) + 1),
                  z[0]);
}

double Interpolant::evaluate(double x) const {
  if (grid.dims() != 1)
    throw std::invalid_argument("Interpolant::evaluate(double): interpolant is not 1D");
  double z = to_unit(grid.domain.lo[0], grid.domain.hi[0], x);
  return clenshaw(coeff, z);
}

Interpolant differentiate(const Interpolant& ip, int order) {
  if (ip.grid.dims() != 1)
    throw std::invalid_argument("differentiate: only 1D interpolants are supported");
  if (order != 1 && order != 2)
    throw std::invalid_argument("differentiate: order must be 1 or 2");
  const double chain = 2.0 / ip.grid.domain.width(0);
  std::vector<double> c(ip.coeff.begin(), ip.coeff.end());
  for (int pass = 0; pass < order; ++pass) {
    const int n = static_cast<int>(c.size()) - 1;
    std::vector<double> d(std::max(n, 1), 0.0);
    if (n >= 1) {
      double dkp1 = 0.0, dkp2 = 0.0;  // d[k+1], d[k+2]
      for (int k = n - 1; k >= 0; --k) {
        double dk = dkp2 + 2.0 * (k + 1) * c[k + 1];
        d[k] = dk;
        dkp2 = dkp1;
        dkp1 = dk;
      }
      d[0] *= 0.5;
    }
    for (double& v : d) v *= chain;
    c = std::move(d);
  }
  Interpolant out;
  out.grid = build_grid(ip.grid.domain, static_cast<int>(c.size()) - 1);
  out.coeff = std::move(c);
  return out;
}

std::vector<double> cheb_to_monomial(int j) {
  if (j < 0 || j > 50)
    throw std::invalid_argument("cheb_to_monomial: j must be in [0, 50]; higher-degree monomial "
                                "expansions are numerically unusable");
  // T_{k+1} = 2 x T_k - T_{k-1}; long double keeps every intermediate integer exact
  // (|coeff| < 2^63 for j <= 50).
  std::vector<long double> prev{1.0L}, cur{0.0L, 1.0L};
  if (j == 0) return {1.0};
  for (int k = 2; k <= j; ++k) {
    std::vector<long double> next(k + 1, 0.0L);
    for (int p = 0; p + 1 <= k; ++p) next[p + 1] += 2.0L * cur[p];
    for (std::size_t p = 0; p < prev.size(); ++p) next[p] -= prev[p];
    prev = std::move(cur);
    cur = std::move(next);
  }
  std::vector<double> out(cur.size());
  for (std::size_t p = 0; p < cur.size(); ++p) out[p] = static_cast<double>(cur[p]);
  return out;
}

}  // namespace dc
