#include "dc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dc/parallel.hpp"
#include "dc/rng.hpp"

namespace dc {

namespace {

constexpr std::size_t kPathBlock = 4096;

void advance_block(const ModelSpec& model, double* rows, std::size_t count,
                   std::size_t row_len, int n_steps, double dt, Rng& rng,
                   const StepSimConfig& sim) {
  if (model.kind != ModelSpec::Kind::CEV) {
    const double drift = model.log_drift() * dt;
    const double var0 = model.sigma * model.sigma * dt;
    const double lam = model.jump_intensity * dt;
    const bool jumps = model.kind == ModelSpec::Kind::Merton && model.jump_intensity > 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      double* row = rows + m * row_len;
      double x = std::log(row[0]);
      for (int u = 1; u <= n_steps; ++u) {
        double mean = x + drift;
        double var = var0;
        if (jumps) {
          const int j = rng.next_poisson(lam);
          mean += j * model.jump_mean;
          var += j * model.jump_std * model.jump_std;
        }
        x = mean + std::sqrt(var) * rng.next_normal();
        row[u] = std::exp(x);
      }
    }
    return;
  }
  const int nsub = sim.n_sub;
  const double h = dt / nsub;
  const double sqh = std::sqrt(h);
  const double halfbeta = 0.5 * model.cev_beta;
  for (std::size_t m = 0; m < count; ++m) {
    double* row = rows + m * row_len;
    double s = row[0];
    bool absorbed = false;
    for (int u = 1; u <= n_steps; ++u) {
      if (!absorbed) {
        for (int k = 0; k < nsub; ++k) {
          const double spos = s > 0.0 ? s : 0.0;
          s += model.rate * spos * h +
               model.sigma * std::pow(spos, halfbeta) * sqh * rng.next_normal();
          if (s <= sim.absorb_floor) {
            absorbed = true;
            s = 0.0;
            break;
          }
        }
      }
      row[u] = s;
    }
  }
}

/// Gaussian elimination with partial pivoting for the tiny regression systems.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    if (d == 0.0) continue;  // ridge keeps this from happening in practice
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = a[r * n + r] != 0.0 ? acc / a[r * n + r] : 0.0;
  }
  return x;
}

}  // namespace

PathMatrix simulate_paths(const ModelSpec& model, double s0, double maturity, int n_steps,
                          std::size_t n_paths, std::uint64_t seed,
                          const StepSimConfig& sim) {
  model.validate();
  if (!(s0 > 0.0)) throw std::invalid_argument("simulate_paths: S0 must be positive");
  if (!(maturity > 0.0))
    throw std::invalid_argument("simulate_paths: maturity must be positive");
  if (n_steps < 1) throw std::invalid_argument("simulate_paths: need at least one step");
  if (n_paths < 1) throw std::invalid_argument("simulate_paths: need at least one path");

  PathMatrix pm;
  pm.n_paths = n_paths;
  pm.n_steps = n_steps;
  pm.s0 = s0;
  pm.maturity = maturity;
  pm.seed = seed;
  pm.sim = sim;
  const std::size_t row_len = static_cast<std::size_t>(n_steps) + 1;
  pm.s.assign(n_paths * row_len, 0.0);
  for (std::size_t m = 0; m < n_paths; ++m) pm.s[m * row_len] = s0;

  const double dt = maturity / n_steps;
  const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;

#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t first = b * kPathBlock;
    const std::size_t count = std::min(kPathBlock, n_paths - first);
    Rng rng(derive_stream(seed, b));
    advance_block(model, pm.s.data() + first * row_len, count, row_len, n_steps, dt, rng,
                  sim);
  }
  return pm;
}

PathMatrix truncate_paths(const PathMatrix& paths, int n_keep) {
  if (n_keep < 1 || n_keep > paths.n_steps)
    throw std::invalid_argument("truncate_paths: n_keep must lie in [1, n_steps]");
  if (n_keep == paths.n_steps) return paths;
  PathMatrix out;
  out.n_paths = paths.n_paths;
  out.n_steps = n_keep;
  out.s0 = paths.s0;
  out.maturity = paths.maturity * n_keep / paths.n_steps;
  out.seed = paths.seed;
  out.sim = paths.sim;
  const std::size_t old_len = static_cast<std::size_t>(paths.n_steps) + 1;
  const std::size_t new_len = static_cast<std::size_t>(n_keep) + 1;
  out.s.resize(paths.n_paths * new_len);
  for (std::size_t m = 0; m < paths.n_paths; ++m)
    std::copy_n(paths.s.begin() + static_cast<std::ptrdiff_t>(m * old_len), new_len,
                out.s.begin() + static_cast<std::ptrdiff_t>(m * new_len));
  return out;
}

LsmResult lsm_price(const PathMatrix& paths, double strike, double rate,
                    int basis_degree) {
  if (basis_degree < 1 || basis_degree > 10)
    throw std::invalid_argument("lsm_price: basis_degree must lie in [1, 10]");
  if (!(strike > 0.0)) throw std::invalid_argument("lsm_price: strike must be positive");
  if (paths.n_paths == 0 || paths.n_steps < 1)
    throw std::invalid_argument("lsm_price: empty path matrix");

  const std::size_t m_paths = paths.n_paths;
  const int n = paths.n_steps;
  const double dt = paths.maturity / n;
  const double disc = std::exp(-rate * dt);
  const std::size_t dim = static_cast<std::size_t>(basis_degree) + 1;

  std::vector<double> cashflow(m_paths);
  std::vector<int> ex_step(m_paths, n);
  for (std::size_t m = 0; m < m_paths; ++m)
    cashflow[m] = std::max(strike - paths.at(m, n), 0.0);

  LsmResult out;
  std::vector<std::size_t> itm;
  std::vector<double> phi(dim), a(dim * dim), rhs(dim);
  itm.reserve(m_paths);

  for (int u = n - 1; u >= 1; --u) {
    itm.clear();
    for (std::size_t m = 0; m < m_paths; ++m)
      if (strike - paths.at(m, u) > 0.0) itm.push_back(m);
    if (itm.empty()) {
      ++out.dates_without_itm;
      continue;
    }

    std::fill(a.begin(), a.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t m : itm) {
      const double x = paths.at(m, u) / strike;  // K-normalized for conditioning
      phi[0] = 1.0;
      for (std::size_t i = 1; i < dim; ++i) phi[i] = phi[i - 1] * x;
      const double y = std::pow(disc, ex_step[m] - u) * cashflow[m];
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) a[i * dim + j] += phi[i] * phi[j];
        rhs[i] += phi[i] * y;
      }
    }
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i + 1; j < dim; ++j) a[i * dim + j] = a[j * dim + i];
      a[i * dim + i] += 1e-10;
    }
    const std::vector<double> coef = solve_dense(a, rhs);

    for (std::size_t m : itm) {
      const double x = paths.at(m, u) / strike;
      double fitted = 0.0, xp = 1.0;
      for (std::size_t i = 0; i < dim; ++i) {
        fitted += coef[i] * xp;
        xp *= x;
      }
      const double immediate = strike - paths.at(m, u);
      if (immediate >= fitted) {
        cashflow[m] = immediate;
        ex_step[m] = u;
      }
    }
  }

  double mean = 0.0;
  for (std::size_t m = 0; m < m_paths; ++m)
    mean += std::pow(disc, ex_step[m]) * cashflow[m];
  mean /= static_cast<double>(m_paths);
  double var = 0.0;
  for (std::size_t m = 0; m < m_paths; ++m) {
    const double d = std::pow(disc, ex_step[m]) * cashflow[m] - mean;
    var += d * d;
  }
  out.price = mean;
  out.std_error = m_paths > 1 ? std::sqrt(var / (static_cast<double>(m_paths) - 1.0) /
                                          static_cast<double>(m_paths))
                              : 0.0;
  return out;
}

double binomial_american_put(double s0, double strike, double rate, double sigma,
                             double maturity, int n_tree, int exercise_every) {
  if (n_tree < 1) throw std::invalid_argument("binomial_american_put: need n_tree >= 1");
  if (!(s0 > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(maturity > 0.0))
    throw std::invalid_argument(
        "binomial_american_put: s0, strike, sigma, maturity must be positive");
  if (exercise_every < 1 || n_tree % exercise_every != 0)
    throw std::invalid_argument(
        "binomial_american_put: exercise_every must divide n_tree");

  const double dt = maturity / n_tree;
  const double up = std::exp(sigma * std::sqrt(dt));
  const double down = 1.0 / up;
  const double grow = std::exp(rate * dt);
  const double p = (grow - down) / (up - down);
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument(
        "binomial_american_put: branch probability " + std::to_string(p) +
        " outside [0, 1]; increase n_tree");
  const double disc = std::exp(-rate * dt);
  const double pu = disc * p;
  const double pd = disc * (1.0 - p);
  const double up2 = up * up;

  std::vector<double> v(static_cast<std::size_t>(n_tree) + 1);
  double s = s0 * std::pow(down, n_tree);
  for (int j = 0; j <= n_tree; ++j) {
    v[j] = std::max(strike - s, 0.0);
    s *= up2;
  }
  for (int level = n_tree - 1; level >= 0; --level) {
    const bool exercisable = level % exercise_every == 0;
    s = s0 * std::pow(down, level);
    for (int j = 0; j <= level; ++j) {
      double hold = pd * v[j] + pu * v[j + 1];
      if (exercisable) hold = std::max(hold, strike - s);
      v[j] = hold;
      s *= up2;
    }
  }
  return v[0];
}

double binomial_american_put_cev(double s0, double strike, double rate, double sigma,
                                 double cev_beta, double maturity, int n_tree) {
  if (n_tree < 1)
    throw std::invalid_argument("binomial_american_put_cev: need n_tree >= 1");
  if (!(s0 > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(maturity > 0.0))
    throw std::invalid_argument(
        "binomial_american_put_cev: s0, strike, sigma, maturity must be positive");
  if (!(cev_beta > 0.0) || cev_beta > 2.0)
    throw std::invalid_argument("binomial_american_put_cev: beta must lie in (0, 2]");

  const double dt = maturity / n_tree;
  const double h = std::sqrt(dt);
  const double disc = std::exp(-rate * dt);
  const bool log_case = cev_beta == 2.0;
  const double ex = 1.0 - 0.5 * cev_beta;  // S-exponent of the transform (0 when beta = 2)
  const double y0 = log_case ? std::log(s0) / sigma : std::pow(s0, ex) / (sigma * ex);

  // Lattice levels m = 2j - i, |m| <= n: Y_m = y0 + m h. Precompute price and
  // up-probability per level; Y <= 0 is the absorbed state (beta < 2 only).
  const int width = 2 * n_tree + 1;
  std::vector<double> price(width), pup(width);
  for (int idx = 0; idx < width; ++idx) {
    const double y = y0 + (idx - n_tree) * h;
    double sp;
    if (log_case)
      sp = std::exp(sigma * y);
    else
      sp = y > 0.0 ? std::pow(sigma * ex * y, 1.0 / ex) : 0.0;
    price[idx] = sp;
    if (sp <= 0.0) {
      pup[idx] = 0.0;
      continue;
    }
    double mu;
    if (log_case)
      mu = rate / sigma - 0.5 * sigma;
    else
      mu = rate * std::pow(sp, ex) / sigma - 0.25 * cev_beta * sigma * std::pow(sp, -ex);
    pup[idx] = std::clamp(0.5 + 0.5 * mu * h, 0.0, 1.0);
  }

  std::vector<double> v(static_cast<std::size_t>(n_tree) + 1);
  for (int j = 0; j <= n_tree; ++j) {
    const double sp = price[2 * j];  // m = 2j - n -> idx = 2j
    v[j] = sp > 0.0 ? std::max(strike - sp, 0.0) : strike;
  }
  for (int level = n_tree - 1; level >= 0; --level) {
    for (int j = 0; j <= level; ++j) {
      const int idx = 2 * j - level + n_tree;
      const double sp = price[idx];
      if (sp <= 0.0) {
        v[j] = strike;  // absorbed: immediate exercise dominates waiting
        continue;
      }
      const double p = pup[idx];
      const double hold = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
      v[j] = std::max(hold, strike - sp);
    }
  }
  return v[0];
}

}  // namespace dc
