#include "dc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "dc/kernels.hpp"
#include "dc/parallel.hpp"

namespace dc {

namespace {

constexpr double kRelTol = 1e-12;

bool close_rel(double a, double b) {
  return std::fabs(a - b) <= kRelTol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

void check_gamma_against_problem(const MomentMatrix& g, const ExerciseProblem& p,
                                 double step) {
  if (g.grid.dims() != 1)
    throw std::invalid_argument("backward_induction: moment matrix grid must be 1D");
  if (!close_rel(g.grid.domain.lo[0], p.domain.lo[0]) ||
      !close_rel(g.grid.domain.hi[0], p.domain.hi[0]))
    throw std::invalid_argument(
        "backward_induction: moment matrix domain does not match the problem domain");
  if (!close_rel(g.dt, step))
    throw std::invalid_argument(
        "backward_induction: moment matrix dt does not match the problem time step");
}

double online_clock() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void ExerciseProblem::validate(int expect_nodes) const {
  if (!payoff) throw std::invalid_argument("ExerciseProblem: payoff not set");
  if (!combiner) throw std::invalid_argument("ExerciseProblem: combiner not set");
  if (!(lipschitz_f > 0.0))
    throw std::invalid_argument("ExerciseProblem: Lipschitz constant must be positive");
  if (times.size() < 2)
    throw std::invalid_argument("ExerciseProblem: need at least one time step");
  const double step = times[1] - times[0];
  if (!(step > 0.0))
    throw std::invalid_argument("ExerciseProblem: time grid must be increasing");
  for (std::size_t u = 1; u < times.size(); ++u) {
    const double d = times[u] - times[u - 1];
    if (std::fabs(d - step) > kRelTol * std::max(1.0, std::fabs(step)))
      throw std::invalid_argument("ExerciseProblem: time grid must be equidistant");
  }
  if (domain.dims() != 1)
    throw std::invalid_argument("ExerciseProblem: domain must be one-dimensional");
  if (use_tail_correction && tail.size() != static_cast<std::size_t>(expect_nodes))
    throw std::invalid_argument("ExerciseProblem: tail vector has wrong length");
  if (use_first_step_smoothing &&
      first_step_continuation.size() != static_cast<std::size_t>(expect_nodes))
    throw std::invalid_argument(
        "ExerciseProblem: first-step continuation vector has wrong length");
}

ValueFunctionSeries backward_induction(const std::vector<const MomentMatrix*>& gamma_steps,
                                       const ExerciseProblem& problem) {
  const int n = problem.steps();
  if (gamma_steps.empty() || std::any_of(gamma_steps.begin(), gamma_steps.end(),
                                         [](const MomentMatrix* g) { return g == nullptr; }))
    throw std::invalid_argument("backward_induction: null moment matrix");
  if (static_cast<int>(gamma_steps.size()) != n)
    throw std::invalid_argument(
        "backward_induction: need one moment matrix per time step");

  const MomentMatrix& g0 = *gamma_steps[0];
  const int np = g0.n() + 1;
  problem.validate(np);
  const double step = problem.times[1] - problem.times[0];
  for (const MomentMatrix* g : gamma_steps) {
    check_gamma_against_problem(*g, problem, step);
    if (g->n() != g0.n())
      throw std::invalid_argument("backward_induction: moment matrices disagree on N");
  }

  // Column access pattern: continuation_k = sum_j coeff_j Gamma[j][k], so keep
  // a transposed copy per distinct matrix (one copy in the shared-matrix case).
  std::map<const MomentMatrix*, std::vector<double>> transposed;
  for (const MomentMatrix* g : gamma_steps) {
    if (transposed.count(g)) continue;
    std::vector<double> t(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j)
      for (int k = 0; k < np; ++k)
        t[static_cast<std::size_t>(k) * np + j] = g->gamma[static_cast<std::size_t>(j) * np + k];
    transposed.emplace(g, std::move(t));
  }

  const std::vector<double> fmat = fit_matrix_1d(g0.n());
  const std::vector<double>& nodes = g0.grid.nodes[0];

  ValueFunctionSeries series;
  series.values.resize(n + 1);
  series.node_values.resize(n + 1);

  std::vector<double> v(np), coeff(np), cont(np);
  for (int k = 0; k < np; ++k) v[k] = problem.payoff(problem.times[n], nodes[k]);
  matvec(fmat.data(), np, np, v.data(), coeff.data());
  series.node_values[n] = v;
  series.values[n] = Interpolant{g0.grid, coeff};

  for (int u = n - 1; u >= 0; --u) {
    if (problem.use_first_step_smoothing && u == n - 1) {
      cont = problem.first_step_continuation;
    } else {
      const std::vector<double>& gt = transposed.at(gamma_steps[u]);
      matvec(gt.data(), np, np, coeff.data(), cont.data());
      if (problem.use_tail_correction)
        for (int k = 0; k < np; ++k)
          cont[k] = problem.discount * (cont[k] + problem.tail[k]);
      else
        for (int k = 0; k < np; ++k) cont[k] *= problem.discount;
    }
    for (int k = 0; k < np; ++k)
      v[k] = problem.combiner(problem.payoff(problem.times[u], nodes[k]), cont[k]);
    matvec(fmat.data(), np, np, v.data(), coeff.data());
    series.node_values[u] = v;
    series.values[u] = Interpolant{g0.grid, coeff};
  }
  return series;
}

ValueFunctionSeries backward_induction(const MomentMatrix& gamma,
                                       const ExerciseProblem& problem) {
  const std::vector<const MomentMatrix*> steps(
      static_cast<std::size_t>(std::max(problem.steps(), 0)), &gamma);
  return backward_induction(steps, problem);
}

AmericanPutResult american_put(MomentMatrix& gamma, const ModelSpec& model, double strike,
                               double maturity, int n_steps,
                               const std::vector<double>& s0_list,
                               const AmericanPutFlags& flags) {
  if (gamma.grid.dims() != 1)
    throw std::invalid_argument("american_put: moment matrix grid must be 1D");
  if (!(strike > 0.0)) throw std::invalid_argument("american_put: strike must be positive");
  if (n_steps < 1) throw std::invalid_argument("american_put: need at least one step");
  if (!close_rel(maturity, n_steps * gamma.dt))
    throw std::invalid_argument(
        "american_put: maturity must equal n_steps * dt of the moment matrix");

  const double t_start = online_clock();
  const int np = gamma.n() + 1;
  const std::vector<double>& nodes = gamma.grid.nodes[0];

  ExerciseProblem p;
  p.payoff = [strike](double, double x) { return std::max(strike - std::exp(x), 0.0); };
  p.combiner = [](double a, double b) { return std::max(a, b); };
  p.lipschitz_f = 1.0;
  p.discount = std::exp(-model.rate * gamma.dt);
  p.domain = gamma.grid.domain;
  p.times.resize(n_steps + 1);
  const double dt = maturity / n_steps;
  for (int u = 0; u <= n_steps; ++u) p.times[u] = u * dt;
  p.times[n_steps] = maturity;

  AmericanPutResult out;
  if (flags.use_tail_correction) {
    p.use_tail_correction = true;
    p.tail = gamma.tail_for_strike(strike);
    out.tail_applied = true;
    double worst = 0.0;
    for (double e : p.tail) worst = std::max(worst, e);
    out.tail_magnitude = p.discount * worst;
  }
  if (flags.use_first_step_smoothing && model.kind != ModelSpec::Kind::CEV) {
    p.use_first_step_smoothing = true;
    p.first_step_continuation.resize(np);
    for (int k = 0; k < np; ++k)
      p.first_step_continuation[k] =
          european_put(model, std::exp(nodes[k]), strike, gamma.dt).price;
    out.smoothing_applied = true;
  }

  out.series = backward_induction(gamma, p);

  const Interpolant& v0 = out.series.values[0];
  const Interpolant d1 = differentiate(v0, 1);
  const Interpolant d2 = differentiate(v0, 2);
  out.quotes.reserve(s0_list.size());
  for (double s0 : s0_list) {
    if (!(s0 > 0.0)) throw std::invalid_argument("american_put: S0 must be positive");
    const double x = std::log(s0);
    if (x < p.domain.lo[0] || x > p.domain.hi[0])
      throw std::invalid_argument(
          "american_put: log S0 = " + std::to_string(x) +
          " lies outside the interpolation domain [" + std::to_string(p.domain.lo[0]) +
          ", " + std::to_string(p.domain.hi[0]) +
          "]; rebuild the moment matrix on a wider domain");
    PutQuote q;
    q.price = v0.evaluate(x);
    const double dv = d1.evaluate(x);
    q.delta = dv / s0;
    q.gamma = (d2.evaluate(x) - dv) / (s0 * s0);
    out.quotes.push_back(q);
  }
  out.online_seconds = online_clock() - t_start;
  return out;
}

PriceSurface price_surface(MomentMatrix& gamma, const ModelSpec& model,
                           const std::vector<double>& strikes,
                           const std::vector<double>& maturities, int steps_per_year,
                           double s0, const AmericanPutFlags& flags) {
  if (strikes.empty() || maturities.empty())
    throw std::invalid_argument("price_surface: need at least one strike and maturity");
  if (steps_per_year < 1)
    throw std::invalid_argument("price_surface: steps_per_year must be >= 1");
  const double dt = 1.0 / steps_per_year;
  if (!close_rel(gamma.dt, dt))
    throw std::invalid_argument(
        "price_surface: moment matrix dt does not equal 1/steps_per_year");
  if (!(s0 > 0.0)) throw std::invalid_argument("price_surface: S0 must be positive");
  const double x0 = std::log(s0);
  if (x0 < gamma.grid.domain.lo[0] || x0 > gamma.grid.domain.hi[0])
    throw std::invalid_argument(
        "price_surface: log S0 lies outside the interpolation domain; rebuild the moment "
        "matrix on a wider domain");

  for (double k : strikes)
    if (!(k > 0.0))
      throw std::invalid_argument("price_surface: strikes must be positive");

  std::vector<int> n_steps(maturities.size());
  for (std::size_t t = 0; t < maturities.size(); ++t) {
    const double ns = maturities[t] * steps_per_year;
    const long long rounded = std::llround(ns);
    if (rounded < 1 ||
        std::fabs(static_cast<double>(rounded) * dt - maturities[t]) >
            kRelTol * std::max(1.0, maturities[t]))
      throw std::invalid_argument(
          "price_surface: maturity " + std::to_string(maturities[t]) +
          " is not an integer multiple of 1/steps_per_year");
    n_steps[t] = static_cast<int>(rounded);
  }
  const int n_max = *std::max_element(n_steps.begin(), n_steps.end());

  PriceSurface surf;
  surf.strikes = strikes;
  surf.maturities = maturities;
  surf.cells.assign(strikes.size() * maturities.size(), SurfaceCell{});
  surf.model = model;
  surf.grid_n = gamma.n();
  surf.backend_tag = gamma.backend_tag;
  if (gamma.config.backend == GammaBackend::MonteCarlo) {
    surf.mc_paths = gamma.config.mc_paths;
    surf.seed = gamma.config.seed;
  }
  surf.offline_seconds = gamma.offline_seconds;

  // Materialize every strike tail up front so the pricing loop only reads the
  // cache (keeps concurrent strike pricing race-free).
  if (flags.use_tail_correction)
    for (double k : strikes) gamma.tail_for_strike(k);

  const double t_start = online_clock();
  double tail_mag = 0.0;
  bool tail_on = false, smooth_on = false;

#pragma omp parallel for schedule(dynamic) reduction(max : tail_mag) if (parallel_enabled())
  for (std::size_t si = 0; si < strikes.size(); ++si) {
    AmericanPutResult r =
        american_put(gamma, model, strikes[si], n_max * dt, n_max, {}, flags);
    tail_mag = std::max(tail_mag, r.tail_magnitude);
    if (si == 0) {
      tail_on = r.tail_applied;
      smooth_on = r.smoothing_applied;
    }
    for (std::size_t t = 0; t < maturities.size(); ++t) {
      const Interpolant& v = r.series.values[n_max - n_steps[t]];
      const Interpolant d1 = differentiate(v, 1);
      const Interpolant d2 = differentiate(v, 2);
      SurfaceCell& cell = surf.cells[si * maturities.size() + t];
      cell.price = v.evaluate(x0);
      const double dv = d1.evaluate(x0);
      cell.delta = dv / s0;
      cell.gamma = (d2.evaluate(x0) - dv) / (s0 * s0);
    }
  }

  surf.tail_applied = tail_on;
  surf.smoothing_applied = smooth_on;
  surf.tail_magnitude = tail_mag;
  surf.online_seconds = online_clock() - t_start;
  return surf;
}

Domain domain_rule(const ModelSpec& model, double s0, double k_min, double k_max,
                   double t_max) {
  model.validate();
  if (!(s0 > 0.0)) throw std::invalid_argument("domain_rule: S0 must be positive");
  if (!(k_min > 0.0) || !(k_max >= k_min))
    throw std::invalid_argument("domain_rule: need 0 < K_min <= K_max");
  if (!(t_max > 0.0)) throw std::invalid_argument("domain_rule: T must be positive");
  const double mu = std::log(s0) + (model.rate - 0.5 * model.sigma * model.sigma) * t_max;
  const double band = 5.0 * model.effective_sigma(s0) * std::sqrt(t_max);
  const double lo = std::min(std::log(0.5 * k_min), mu - band);
  const double hi = std::max(std::log(2.0 * k_max) + model.rate * t_max, mu + band);
  return Domain(lo, hi);
}

}  // namespace dc
