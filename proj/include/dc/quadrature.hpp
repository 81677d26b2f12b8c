#pragma once

#include <complex>
#include <vector>

namespace dc {

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre rule with n points on [-1, 1].
QuadRule gauss_legendre(int n);

/// Composite Gauss-Legendre: `panels` equal panels on [a, b], `per_panel` points each.
QuadRule gauss_legendre_panels(double a, double b, int panels, int per_panel);

/// Clenshaw-Curtis rule with `nodes` points on [a, b] (degree nodes - 1).
QuadRule clenshaw_curtis(double a, double b, int nodes);

/// J_0(x) .. J_nmax(x) by Miller's backward recurrence; out has nmax + 1 slots.
void bessel_j_array(double x, int nmax, double* out);

/// that_j(kappa) = integral_{-1}^{1} T_j(u) exp(i kappa u) du for j = 0..n,
/// via the Bessel expansion of the plane wave truncated at m <= |kappa| + extra.
std::vector<std::complex<double>> cheb_fourier(int n, double kappa, int extra = 40);

}  // namespace dc
