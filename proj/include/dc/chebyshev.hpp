#pragma once

#include <span>
#include <vector>

namespace dc {

/// Hyper-rectangular domain [lo_i, hi_i] per dimension.
struct Domain {
  std::vector<double> lo;
  std::vector<double> hi;

  Domain() = default;
  Domain(double lo1, double hi1) : lo{lo1}, hi{hi1} {}
  Domain(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {}

  int dims() const { return static_cast<int>(lo.size()); }
  double width(int d) const { return hi[d] - lo[d]; }
  bool contains(std::span<const double> x, double slack = 0.0) const;
  void validate() const;
};

/// Map x in [lo, hi] to z in [-1, 1] and back. from_unit(1) = hi, from_unit(-1) = lo.
double to_unit(double lo, double hi, double x);
double from_unit(double lo, double hi, double z);

/// Tensor grid of Chebyshev-Lobatto points. Per dimension i the grid holds
/// N_i + 1 nodes, strictly decreasing from hi_i to lo_i (unit nodes cos(pi*k/N_i)).
/// Flat ordering of tensor points is row-major with dimension 0 slowest.
struct ChebGrid {
  Domain domain;
  std::vector<int> degree;                        // N_i
  std::vector<std::vector<double>> unit_nodes;    // per dim, descending from 1 to -1
  std::vector<std::vector<double>> nodes;         // per dim, transformed

  int dims() const { return static_cast<int>(degree.size()); }
  std::size_t point_count() const;
  std::vector<double> point(std::size_t flat) const;
};

ChebGrid build_grid(const Domain& domain, const std::vector<int>& degree);
ChebGrid build_grid(const Domain& domain, int degree);  // 1D convenience

/// Tensor Chebyshev interpolant: coeff is row-major over (N_1+1) x ... x (N_D+1).
struct Interpolant {
  ChebGrid grid;
  std::vector<double> coeff;

  double evaluate(std::span<const double> x) const;
  double evaluate(double x) const;
};

/// Chebyshev coefficients from values at the grid nodes (same row-major order
/// as ChebGrid points). Exact (to round-off) for polynomials of per-dimension
/// degree <= N_i.
Interpolant fit(const ChebGrid& grid, std::span<const double> values);

/// Dense 1D coefficient-from-values matrix, row-major (N+1)^2: coeff = F * values.
std::vector<double> fit_matrix_1d(int degree);

/// Derivative interpolant of a 1D interpolant, order 1 or 2.
Interpolant differentiate(const Interpolant& ip, int order);

/// Monomial coefficients (ascending powers) of T_j. Capped at j <= 50: beyond
/// that the coefficients overwhelm double-precision cancellation and any
/// monomial-basis use of T_j is numerically meaningless.
std::vector<double> cheb_to_monomial(int j);

/// Evaluate T_0..T_n at z into out (out has n+1 slots); stable three-term recurrence.
void cheb_t_values(int n, double z, double* out);

/// Clenshaw evaluation of sum_j c_j T_j(z); works for |z| > 1 as well.
double clenshaw(std::span<const double> c, double z);

}  // namespace dc
