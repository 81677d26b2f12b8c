#pragma once

#include <vector>

namespace dc {

/// Inputs for the dynamic-programming error bounds. rho and degrees are
/// per-dimension; the per-step arrays are optional refinements (empty means the
/// corresponding scalar is used for every step).
struct ErrorBoundInputs {
  std::vector<double> rho;       // Bernstein radii, each > 1
  double b = 1.0;                // sup of the value function on the ellipse
  std::vector<int> degrees;      // N_i per dimension
  int n = 1;                     // number of time steps
  int u = 0;                     // step the bound is evaluated at
  double lipschitz_f = 1.0;
  double eps_tr = 0.0;           // truncation error bound
  double eps_gm = 0.0;           // generalized-moment approximation bound
  double v_bar = 0.0;            // sup of the value function on the domain
  std::vector<double> eps_int_per_step;  // eps_int^j for j = u..n (size n-u+1)
  std::vector<double> v_bar_per_step;    // V-bar_j for j = u+1..n (size n-u)

  void validate() const;
};

/// Bound evaluations can overflow for large step counts; above ~1e308 the
/// value is +infinity and the flag is set.
struct BoundValue {
  double value = 0.0;
  bool overflow = false;
};

/// Interpolation error bound for an analytic function on the Bernstein ellipse:
/// 2^{D/2+1} B (sum_i rho_i^{-2N_i} prod_j 1/(1-rho_j^{-2}))^{1/2}.
double eps_int(const std::vector<double>& rho, const std::vector<int>& degrees, double b);

/// Lebesgue constant bound prod_i (2/pi log(N_i+1) + 1).
double lebesgue_bound(const std::vector<int>& degrees);

/// Recursive bound: sum_{j=u}^n C^{j-u} eps_int^j
///   + Lambda L_f sum_{j=u+1}^n C^{j-(u+1)} (eps_tr + eps_gm Vbar_j),
/// C = Lambda L_f (1 + eps_gm). Compensated summation throughout.
BoundValue recursive_bound(const ErrorBoundInputs& in);

/// Simplified bound (eps_int + eps_tr + eps_gm Vbar) Ctilde^{n+1-u} with
/// Ctilde = max{2, C}; dominates the recursive bound for any valid inputs.
BoundValue simplified_bound(const ErrorBoundInputs& in);

/// Step-count convergence condition: the right-hand side of
///   n < log(rho) N_min / (C_1 D (log Lambda + log L_f)) + 1.
/// Returns +infinity when the denominator is nonpositive (L_f so small the
/// condition never binds).
double max_timesteps(double rho, const std::vector<int>& degrees, double lipschitz_f,
                     double c1);

}  // namespace dc
