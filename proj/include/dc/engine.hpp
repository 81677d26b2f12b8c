#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dc/chebyshev.hpp"
#include "dc/models.hpp"
#include "dc/moments.hpp"

namespace dc {

/// One optimal-stopping instance on a 1D log-price domain: terminal/running
/// payoff g(t, x), combiner f(exercise, continuation) with declared Lipschitz
/// constant, per-step discount factor, and an equidistant time grid
/// t_0 < ... < t_n = T.
struct ExerciseProblem {
  std::function<double(double, double)> payoff;    // g(t, x)
  std::function<double(double, double)> combiner;  // f(g, continuation)
  double lipschitz_f = 1.0;
  double discount = 1.0;                           // e^{-r dt} per step
  std::vector<double> times;                       // size n + 1
  Domain domain;
  bool use_tail_correction = false;
  std::vector<double> tail;                        // e_k, added inside the discount
  bool use_first_step_smoothing = false;
  std::vector<double> first_step_continuation;     // replaces step t_{n-1} continuation

  int steps() const { return static_cast<int>(times.size()) - 1; }
  void validate(int expect_nodes) const;
};

/// Backward-induction output: one interpolant and its node values per time step.
struct ValueFunctionSeries {
  std::vector<Interpolant> values;                 // index u = 0..n
  std::vector<std::vector<double>> node_values;    // index u, then node k
};

/// Algorithm core: V_T = g at the nodes, then for u = n-1..0
///   c_k = discount * (sum_j coeff_j(t_{u+1}) Gamma[j][k] + tail_k),
///   V(x_k) = f(g(t_u, x_k), c_k), refit.
/// The per-step overload takes Gamma matrices indexed by the target step u
/// (all sharing the problem grid and step); the single-matrix overload reuses
/// one matrix for every step.
ValueFunctionSeries backward_induction(const MomentMatrix& gamma,
                                       const ExerciseProblem& problem);
ValueFunctionSeries backward_induction(const std::vector<const MomentMatrix*>& gamma_steps,
                                       const ExerciseProblem& problem);

struct AmericanPutFlags {
  bool use_tail_correction = true;
  /// Replace the first backstep's continuation with the closed-form European
  /// one-step value, removing the payoff kink from the interpolated terminal
  /// condition. Auto-disabled for models without a European closed form (CEV).
  bool use_first_step_smoothing = true;
};

struct AmericanPutResult {
  std::vector<PutQuote> quotes;     // one per requested S0
  ValueFunctionSeries series;
  bool tail_applied = false;
  bool smoothing_applied = false;
  double tail_magnitude = 0.0;      // max_k discount * e_k actually added per step
  double online_seconds = 0.0;
};

/// Bermudan put with n equidistant exercise dates on [0, T]; T must equal
/// n * gamma.dt. Prices, deltas, and gammas at the requested spot levels; log S0
/// must lie inside the interpolation domain.
AmericanPutResult american_put(MomentMatrix& gamma, const ModelSpec& model, double strike,
                               double maturity, int n_steps,
                               const std::vector<double>& s0_list,
                               const AmericanPutFlags& flags = {});

struct SurfaceCell {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
};

struct PriceSurface {
  std::vector<double> strikes;
  std::vector<double> maturities;
  std::vector<SurfaceCell> cells;   // row-major, strikes slowest

  ModelSpec model;
  int grid_n = 0;
  std::string backend_tag;
  std::uint64_t mc_paths = 0;
  std::uint64_t seed = 0;
  bool tail_applied = false;
  bool smoothing_applied = false;
  double tail_magnitude = 0.0;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;

  const SurfaceCell& at(std::size_t strike_idx, std::size_t maturity_idx) const {
    return cells[strike_idx * maturities.size() + maturity_idx];
  }
};

/// Whole put surface from one moment matrix: per strike a single backward
/// induction to the longest maturity; every requested maturity is read off as
/// the value function with that many steps to go (the recursion is
/// time-homogeneous, so this is exactly the per-maturity computation). Each
/// maturity must be an integer multiple of 1/steps_per_year.
PriceSurface price_surface(MomentMatrix& gamma, const ModelSpec& model,
                           const std::vector<double>& strikes,
                           const std::vector<double>& maturities, int steps_per_year,
                           double s0, const AmericanPutFlags& flags = {});

/// Interpolation domain sizing:
///   [min(log(0.5 K_min), mu - 5 sb sqrt(T)), max(log(2 K_max e^{rT}), mu + 5 sb sqrt(T))]
/// with mu = log S0 + (r - sigma^2/2) T and sb the model's effective sigma at S0.
Domain domain_rule(const ModelSpec& model, double s0, double k_min, double k_max,
                   double t_max);

}  // namespace dc
