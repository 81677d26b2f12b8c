#include "dc/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dc/chebyshev.hpp"

namespace dc {

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration from the Chebyshev-based initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

QuadRule gauss_legendre_panels(double a, double b, int panels, int per_panel) {
  if (!(a < b)) throw std::invalid_argument("gauss_legendre_panels: need a < b");
  if (panels < 1 || per_panel < 1)
    throw std::invalid_argument("gauss_legendre_panels: need panels >= 1 and per_panel >= 1");
  QuadRule base = gauss_legendre(per_panel);
  QuadRule r;
  r.x.reserve(static_cast<std::size_t>(panels) * per_panel);
  r.w.reserve(static_cast<std::size_t>(panels) * per_panel);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    for (int i = 0; i < per_panel; ++i) {
      r.x.push_back(mid + 0.5 * h * base.x[i]);
      r.w.push_back(0.5 * h * base.w[i]);
    }
  }
  return r;
}

QuadRule clenshaw_curtis(double a, double b, int nodes) {
  if (!(a < b)) throw std::invalid_argument("clenshaw_curtis: need a < b");
  if (nodes < 2) throw std::invalid_argument("clenshaw_curtis: need at least 2 nodes");
  const int n = nodes - 1;  // polynomial degree
  // Quadrature weights = F^T d where F is the coefficient-from-values matrix and
  // d_j = integral of T_j over [-1, 1].
  auto f = fit_matrix_1d(n);
  std::vector<double> d(n + 1, 0.0);
  for (int j = 0; j <= n; j += 2) d[j] = 2.0 / (1.0 - static_cast<double>(j) * j);
  QuadRule r;
  r.x.resize(nodes);
  r.w.resize(nodes);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int k = 0; k <= n; ++k) {
    double z = (n == 0) ? 1.0 : std::cos(std::numbers::pi * k / n);
    if (k == 0) z = 1.0;
    if (k == n) z = -1.0;
    if (2 * k == n) z = 0.0;
    r.x[k] = mid + half * z;
    double w = 0.0;
    for (int j = 0; j <= n; ++j) w += f[static_cast<std::size_t>(j) * (n + 1) + k] * d[j];
    r.w[k] = half * w;
  }
  return r;
}

void bessel_j_array(double x, int nmax, double* out) {
  if (nmax < 0) throw std::invalid_argument("bessel_j_array: nmax must be >= 0");
  const double ax = std::abs(x);
  if (ax < 1e-300) {
    out[0] = 1.0;
    for (int m = 1; m <= nmax; ++m) out[m] = 0.0;
    return;
  }
  // Backward (Miller) recurrence from well above both nmax and |x|.
  int start = std::max(nmax, static_cast<int>(ax)) + 16;
  start += static_cast<int>(2.0 * std::sqrt(static_cast<double>(start)));
  if (start % 2 == 1) ++start;
  std::vector<double> j(start + 2, 0.0);
  j[start + 1] = 0.0;
  j[start] = 1e-280;
  double norm = 0.0;
  for (int m = start; m >= 1; --m) {
    j[m - 1] = (2.0 * m / ax) * j[m] - j[m + 1];
    if (std::abs(j[m - 1]) > 1e260) {
      for (int q = m - 1; q <= start + 1; ++q) j[q] *= 1e-260;
    }
  }
  norm = j[0];
  for (int m = 2; m <= start; m += 2) norm += 2.0 * j[m];
  for (int m = 0; m <= nmax; ++m) out[m] = j[m] / norm;
  if (x < 0.0) {
    for (int m = 1; m <= nmax; m += 2) out[m] = -out[m];
  }
}

std::vector<std::complex<double>> cheb_fourier(int n, double kappa, int extra) {
  std::vector<std::complex<double>> out(n + 1);
  if (std::abs(kappa) < 1e-14) {
    for (int j = 0; j <= n; ++j)
      out[j] = (j % 2 == 0) ? std::complex<double>(2.0 / (1.0 - static_cast<double>(j) * j), 0.0)
                            : std::complex<double>(0.0, 0.0);
    return out;
  }
  const int mmax = static_cast<int>(std::abs(kappa)) + extra;
  std::vector<double> jm(mmax + 1);
  bessel_j_array(kappa, mmax, jm.data());
  // exp(i kappa u) = sum_m i^m (2 - delta_{m0}) J_m(kappa) T_m(u) and
  // integral T_j T_m = 1/(1-(j+m)^2) + 1/(1-(j-m)^2) for j + m even, else 0
  // (the product-to-sum 1/2 cancels against integral T_p = 2/(1-p^2)).
  // Only m of j's parity contributes, so that_j = i^j * (real series).
  const std::complex<double> ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int j = 0; j <= n; ++j) {
    double s = 0.0;
    double sign = 1.0;  // (-1)^((m - j)/2) starting at m = j; for m < j mirrored below
    // walk m over j's parity: m = j%2, j%2+2, ...
    for (int m = j % 2; m <= mmax; m += 2) {
      const double jp = static_cast<double>(j + m);
      const double jd = static_cast<double>(j - m);
      double overlap = 1.0 / (1.0 - jp * jp) + 1.0 / (1.0 - jd * jd);
      double c = (m == 0) ? 1.0 : 2.0;
      // i^m = i^j * i^(m-j); (m - j) even so i^(m-j) = (-1)^((m-j)/2)
      int half = (m - j) / 2;
      sign = (half % 2 == 0) ? 1.0 : -1.0;
      s += sign * c * jm[m] * overlap;
    }
    out[j] = ipow[j % 4] * s;
  }
  return out;
}

}  // namespace dc
