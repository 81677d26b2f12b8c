#pragma once

#include <cstdint>
#include <vector>

#include "dc/models.hpp"

namespace dc {

/// Simulated price paths, row-major: path m, time point u -> s[m * (n_steps+1) + u].
struct PathMatrix {
  std::size_t n_paths = 0;
  int n_steps = 0;
  double s0 = 0.0;
  double maturity = 0.0;
  std::uint64_t seed = 0;
  StepSimConfig sim;
  std::vector<double> s;

  double at(std::size_t m, int u) const {
    return s[m * (static_cast<std::size_t>(n_steps) + 1) + u];
  }
};

/// Exact per-step sampling for BS/Merton, full-truncation Euler for CEV
/// (absorbed paths drop to S = 0 and stay there). Deterministic per seed with
/// per-block sub-streams; worker count never changes the result.
PathMatrix simulate_paths(const ModelSpec& model, double s0, double maturity, int n_steps,
                          std::size_t n_paths, std::uint64_t seed,
                          const StepSimConfig& sim = {});

/// Prefix view: the first n_keep steps of every path, with the maturity
/// rescaled so the step size is unchanged.
PathMatrix truncate_paths(const PathMatrix& paths, int n_keep);

struct LsmResult {
  double price = 0.0;
  double std_error = 0.0;
  int dates_without_itm = 0;  // exercise dates where no path was in the money (held)
};

/// Longstaff-Schwartz put price on simulated paths: backward over exercise
/// dates, regression of discounted realized cashflows on monomials of S up to
/// basis_degree (in-the-money paths only, ridge 1e-10 on the K-normalized
/// normal equations), exercise where immediate >= fitted continuation, price =
/// mean discounted realized cashflow (low-bias estimator) with standard error.
LsmResult lsm_price(const PathMatrix& paths, double strike, double rate,
                    int basis_degree = 3);

/// CRR binomial American put. exercise_every = m restricts exercise to every
/// m-th tree level (Bermudan alignment); 1 = fully American.
double binomial_american_put(double s0, double strike, double rate, double sigma,
                             double maturity, int n_tree, int exercise_every = 1);

/// American put on the Nelson-Ramaswamy unit-diffusion lattice for CEV
/// (beta in (0, 2]; beta = 2 uses the log transform), with branch-probability
/// clamping and absorption at S = 0.
double binomial_american_put_cev(double s0, double strike, double rate, double sigma,
                                 double cev_beta, double maturity, int n_tree);

}  // namespace dc
