#include "dc/moments.hpp"

#include <quadmath.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "dc/kernels.hpp"
#include "dc/parallel.hpp"
#include "dc/quadrature.hpp"
#include "dc/rng.hpp"

namespace dc {

namespace {

using f128 = __float128;

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr int kMonomialCap = 50;

const f128 kInvSqrt2piQ = f128(1) / sqrtq(2 * M_PIq);
const f128 kInvSqrt2Q = f128(1) / sqrtq(f128(2));

f128 phi_q(f128 x) { return expq(f128(-0.5) * x * x) * kInvSqrt2piQ; }

f128 cdf_q(f128 x) { return f128(0.5) * erfcq(-x * kInvSqrt2Q); }

void check_build_inputs(const ModelSpec& model, const ChebGrid& grid, double dt) {
  model.validate();
  grid.domain.validate();
  if (grid.dims() != 1)
    throw std::invalid_argument("moments: grid must be one-dimensional");
  if (!(dt > 0.0)) throw std::invalid_argument("moments: dt must be positive");
}

MomentMatrix make_shell(const ModelSpec& model, const ChebGrid& grid, double dt) {
  MomentMatrix m;
  m.grid = grid;
  m.dt = dt;
  m.model = model;
  const std::size_t np = static_cast<std::size_t>(grid.degree[0]) + 1;
  m.gamma.assign(np * np, 0.0);
  m.tail_q.assign(np, 0.0);
  m.tail_w.assign(np, 0.0);
  return m;
}

/// Closed-form tail decomposition against the transition mixture.
void mixture_tail(const ModelSpec& model, const ChebGrid& grid, double dt,
                  std::vector<double>& q, std::vector<double>& w) {
  const double lo = grid.domain.lo[0];
  const int np = grid.degree[0] + 1;
  for (int k = 0; k < np; ++k) {
    NormalMixture mix = increment_mixture(model, grid.nodes[0][k], dt);
    q[k] = std::clamp(mix.cdf(lo), 0.0, 1.0);
    w[k] = std::max(mix.partial_exp(lo), 0.0);
  }
}

/// Standardized truncated normal moments E[Z^l 1_{[alpha,beta]}] for standard
/// normal Z, l = 0..L, in quad precision. The l >= 2 recurrence picks up a
/// factor (l-1) times the moment two below plus boundary density terms; the
/// boundary terms are skipped outright when the density underflowed to zero so
/// that huge powers of alpha/beta can never turn into inf * 0.
void std_trunc_moments_q(f128 alpha, f128 beta, int L, f128* mt) {
  const f128 pa = phi_q(alpha);
  const f128 pb = phi_q(beta);
  mt[0] = cdf_q(beta) - cdf_q(alpha);
  if (L == 0) return;
  mt[1] = pa - pb;
  f128 powa = 1, powb = 1;
  for (int l = 2; l <= L; ++l) {
    powa *= alpha;
    powb *= beta;
    const f128 ta = (pa == 0) ? f128(0) : powa * pa;
    const f128 tb = (pb == 0) ? f128(0) : powb * pb;
    mt[l] = f128(l - 1) * mt[l - 2] + ta - tb;
  }
}

/// Pascal triangle in quad precision, C[l*(L+1)+i] = binom(l, i), l,i <= L.
std::vector<f128> binom_table_q(int L) {
  std::vector<f128> c(static_cast<std::size_t>(L + 1) * (L + 1), f128(0));
  for (int l = 0; l <= L; ++l) {
    c[static_cast<std::size_t>(l) * (L + 1)] = 1;
    for (int i = 1; i <= l; ++i)
      c[static_cast<std::size_t>(l) * (L + 1) + i] =
          c[static_cast<std::size_t>(l - 1) * (L + 1) + i - 1] +
          (i <= l - 1 ? c[static_cast<std::size_t>(l - 1) * (L + 1) + i] : f128(0));
  }
  return c;
}

/// Monomial coefficients of T_0..T_jmax in quad precision (exact integers for
/// jmax <= 50), A[j*(jmax+1)+l] = coefficient of y^l in T_j.
std::vector<f128> cheb_monomials_q(int jmax) {
  const std::size_t w = static_cast<std::size_t>(jmax) + 1;
  std::vector<f128> a(w * w, f128(0));
  a[0] = 1;
  if (jmax >= 1) a[w + 1] = 1;
  for (int j = 2; j <= jmax; ++j)
    for (int l = 0; l <= j; ++l)
      a[j * w + l] = (l >= 1 ? 2 * a[(j - 1) * w + l - 1] : f128(0)) - a[(j - 2) * w + l];
  return a;
}

/// Truncated-moments route for rows 0..j_max (j_max <= 50): per mixture
/// component, standardized truncated moments on the unit scale are bound back
/// to the component's (mu, s) and contracted with the monomial expansion of
/// T_j. The bind-back and contraction cancel catastrophically in double (T_50
/// monomial coefficients reach 5.6e17), hence the quad-precision interior.
void closed_form_rows(const ModelSpec& model, const ChebGrid& grid, double dt, int j_max,
                      double* gamma, std::size_t stride) {
  const double lo = grid.domain.lo[0];
  const double hi = grid.domain.hi[0];
  const int np = grid.degree[0] + 1;
  const int L = j_max;
  const std::vector<f128> mono = cheb_monomials_q(j_max);
  const std::vector<f128> binom = binom_table_q(L);
  const std::size_t mw = static_cast<std::size_t>(j_max) + 1;
  const std::size_t bw = static_cast<std::size_t>(L) + 1;

#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int k = 0; k < np; ++k) {
    const NormalMixture mix = increment_mixture(model, grid.nodes[0][k], dt);
    std::vector<f128> mj(mw, f128(0));
    std::vector<f128> mt(bw), mom(bw), mupow(bw), spow(bw);
    for (const auto& comp : mix.comp) {
      const f128 mu = (2 * f128(comp.mean) - lo - hi) / (f128(hi) - lo);
      const f128 s = 2 * f128(comp.stddev) / (f128(hi) - lo);
      std_trunc_moments_q((f128(-1) - mu) / s, (f128(1) - mu) / s, L, mt.data());
      mupow[0] = 1;
      spow[0] = 1;
      for (int i = 1; i <= L; ++i) {
        mupow[i] = mupow[i - 1] * mu;
        spow[i] = spow[i - 1] * s;
      }
      for (int l = 0; l <= L; ++l) {
        f128 acc = 0;
        for (int i = 0; i <= l; ++i)
          acc += binom[l * bw + i] * mupow[l - i] * spow[i] * mt[i];
        mom[l] = acc;
      }
      for (int j = 0; j <= j_max; ++j) {
        f128 acc = 0;
        for (int l = j % 2; l <= j; l += 2) acc += mono[j * mw + l] * mom[l];
        mj[j] += f128(comp.weight) * acc;
      }
    }
    for (int j = 0; j <= j_max; ++j)
      gamma[j * stride + k] = std::clamp(static_cast<double>(mj[j]), -1.0, 1.0);
  }
}

int auto_quad_nodes(int degree) { return 4 * (degree + 1); }

/// Density route for rows j_lo..j_hi: shared Chebyshev value table at the
/// quadrature points, then one weighted matvec per grid node.
void quadrature_rows(const ModelSpec& model, const ChebGrid& grid, double dt, int j_lo,
                     int j_hi, int total_nodes, int panels, double* gamma,
                     std::size_t stride) {
  const double lo = grid.domain.lo[0];
  const double hi = grid.domain.hi[0];
  const int np = grid.degree[0] + 1;
  const int per_panel = (total_nodes + panels - 1) / panels;
  const QuadRule rule = gauss_legendre_panels(lo, hi, panels, per_panel);
  const std::size_t q = rule.x.size();

  std::vector<double> tvals(static_cast<std::size_t>(j_hi + 1) * q);
  for (std::size_t i = 0; i < q; ++i) tvals[i] = 1.0;
  if (j_hi >= 1)
    for (std::size_t i = 0; i < q; ++i) tvals[q + i] = to_unit(lo, hi, rule.x[i]);
  for (int j = 2; j <= j_hi; ++j)
    for (std::size_t i = 0; i < q; ++i)
      tvals[j * q + i] = 2.0 * tvals[q + i] * tvals[(j - 1) * q + i] - tvals[(j - 2) * q + i];

#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int k = 0; k < np; ++k) {
    const NormalMixture mix = increment_mixture(model, grid.nodes[0][k], dt);
    std::vector<double> g(q);
    for (std::size_t i = 0; i < q; ++i) g[i] = rule.w[i] * mix.pdf(rule.x[i]);
    std::vector<double> col(static_cast<std::size_t>(j_hi - j_lo) + 1);
    matvec(tvals.data() + static_cast<std::size_t>(j_lo) * q, col.size(), q, g.data(),
           col.data());
    for (int j = j_lo; j <= j_hi; ++j) gamma[j * stride + k] = col[j - j_lo];
  }
}

/// Four-lane interleaved Chebyshev accumulation for the Monte Carlo route. The
/// recurrence is seeded with the lane weight so excluded samples ride along as
/// exact zeros; summation order is fixed by construction.
void mc_accumulate(const double* xs, std::size_t m, double lo, double hi, int degree,
                   double* col, double& q_out, double& w_out) {
  const int np = degree + 1;
  std::vector<double> acc(static_cast<std::size_t>(np) * 4, 0.0);
  std::size_t below = 0;
  double wsum = 0.0;
  double z[4], tp[4], tc[4];

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (int l = 0; l < 4; ++l) {
      const double x = xs[i + l];
      if (x < lo) {
        ++below;
        wsum += std::exp(x);  // exp(-inf) = 0 covers absorbed states
        z[l] = 0.0;
        tp[l] = 0.0;
      } else if (x > hi) {
        z[l] = 0.0;
        tp[l] = 0.0;
      } else {
        z[l] = to_unit(lo, hi, x);
        tp[l] = 1.0;
      }
      tc[l] = z[l] * tp[l];
      acc[l] += tp[l];
      if (degree >= 1) acc[4 + l] += tc[l];
    }
    for (int j = 2; j <= degree; ++j) {
      double* aj = acc.data() + static_cast<std::size_t>(j) * 4;
      for (int l = 0; l < 4; ++l) {
        const double tn = 2.0 * z[l] * tc[l] - tp[l];
        aj[l] += tn;
        tp[l] = tc[l];
        tc[l] = tn;
      }
    }
  }
  for (; i < m; ++i) {
    const double x = xs[i];
    if (x < lo) {
      ++below;
      wsum += std::exp(x);
      continue;
    }
    if (x > hi) continue;
    const double zz = to_unit(lo, hi, x);
    double p = 1.0, c = zz;
    acc[0] += p;
    if (degree >= 1) acc[4] += c;
    for (int j = 2; j <= degree; ++j) {
      const double t = 2.0 * zz * c - p;
      acc[static_cast<std::size_t>(j) * 4] += t;
      p = c;
      c = t;
    }
  }

  const double inv = 1.0 / static_cast<double>(m);
  for (int j = 0; j < np; ++j) {
    const double* aj = acc.data() + static_cast<std::size_t>(j) * 4;
    col[j] = std::clamp(((aj[0] + aj[1]) + (aj[2] + aj[3])) * inv, -1.0, 1.0);
  }
  q_out = static_cast<double>(below) * inv;
  w_out = wsum * inv;
}

void mc_accumulate_reference(const double* xs, std::size_t m, double lo, double hi,
                             int degree, double* col, double& q_out, double& w_out) {
  const int np = degree + 1;
  std::vector<double> acc(np, 0.0);
  std::size_t below = 0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = xs[i];
    if (x < lo) {
      ++below;
      wsum += std::exp(x);
      continue;
    }
    if (x > hi) continue;
    const double z = to_unit(lo, hi, x);
    double p = 1.0, c = z;
    acc[0] += 1.0;
    if (degree >= 1) acc[1] += z;
    for (int j = 2; j <= degree; ++j) {
      const double t = 2.0 * z * c - p;
      acc[j] += t;
      p = c;
      c = t;
    }
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (int j = 0; j < np; ++j) col[j] = std::clamp(acc[j] * inv, -1.0, 1.0);
  q_out = static_cast<double>(below) * inv;
  w_out = wsum * inv;
}

MomentMatrix gamma_mc_impl(const ModelSpec& model, const ChebGrid& grid, double dt,
                           std::uint64_t n_paths, std::uint64_t seed,
                           const StepSimConfig& sim, bool reference) {
  check_build_inputs(model, grid, dt);
  if (n_paths < 1)
    throw std::invalid_argument("gamma_mc: need at least one simulation path");
  MomentMatrix m = make_shell(model, grid, dt);
  const int np = grid.degree[0] + 1;
  const std::size_t stride = np;
  const double lo = grid.domain.lo[0];
  const double hi = grid.domain.hi[0];

#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int k = 0; k < np; ++k) {
    const std::vector<double> xs = simulate_one_step_antithetic(
        model, grid.nodes[0][k], dt, n_paths, derive_stream(seed, k), sim);
    std::vector<double> col(np);
    if (reference)
      mc_accumulate_reference(xs.data(), xs.size(), lo, hi, grid.degree[0], col.data(),
                              m.tail_q[k], m.tail_w[k]);
    else
      mc_accumulate(xs.data(), xs.size(), lo, hi, grid.degree[0], col.data(), m.tail_q[k],
                    m.tail_w[k]);
    for (int j = 0; j < np; ++j) m.gamma[j * stride + k] = col[j];
  }

  m.config.backend = GammaBackend::MonteCarlo;
  m.config.mc_paths = n_paths;
  m.config.seed = seed;
  m.config.sim = sim;
  m.backend_tag = reference ? "monte_carlo_reference" : "monte_carlo";
  return m;
}

}  // namespace

std::string to_string(GammaBackend b) {
  switch (b) {
    case GammaBackend::ClosedForm: return "closed_form";
    case GammaBackend::Quadrature: return "quadrature";
    case GammaBackend::Fourier: return "fourier";
    case GammaBackend::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

GammaBackend gamma_backend_from_string(const std::string& name) {
  if (name == "closed_form") return GammaBackend::ClosedForm;
  if (name == "quadrature") return GammaBackend::Quadrature;
  if (name == "fourier") return GammaBackend::Fourier;
  if (name == "monte_carlo" || name == "mc") return GammaBackend::MonteCarlo;
  throw std::invalid_argument("gamma_backend_from_string: unknown backend '" + name + "'");
}

std::uint64_t MomentMatrix::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_u64 = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ULL;
    }
  };
  auto mix_f64 = [&mix_u64](double v) { mix_u64(std::bit_cast<std::uint64_t>(v)); };
  mix_u64(static_cast<std::uint64_t>(model.kind));
  mix_f64(model.rate);
  mix_f64(model.sigma);
  mix_f64(model.jump_intensity);
  mix_f64(model.jump_mean);
  mix_f64(model.jump_std);
  mix_f64(model.cev_beta);
  mix_f64(dt);
  mix_f64(grid.domain.lo[0]);
  mix_f64(grid.domain.hi[0]);
  mix_u64(static_cast<std::uint64_t>(grid.degree[0]));
  return h;
}

const std::vector<double>& MomentMatrix::tail_for_strike(double strike) {
  auto it = tail_by_strike.find(strike);
  if (it != tail_by_strike.end()) return it->second;
  std::vector<double> e(tail_q.size());
  for (std::size_t k = 0; k < e.size(); ++k)
    e[k] = std::clamp(strike * tail_q[k] - tail_w[k], 0.0, strike);
  return tail_by_strike.emplace(strike, std::move(e)).first->second;
}

MomentMatrix gamma_closed_form(const ModelSpec& model, const ChebGrid& grid, double dt) {
  check_build_inputs(model, grid, dt);
  if (!model.has_increment_mixture())
    throw std::invalid_argument(
        "gamma_closed_form: model has no normal-mixture transition (use the Monte Carlo "
        "backend for CEV)");
  MomentMatrix m = make_shell(model, grid, dt);
  const int degree = grid.degree[0];
  const int jcap = std::min(degree, kMonomialCap);
  closed_form_rows(model, grid, dt, jcap, m.gamma.data(), degree + 1);
  if (degree > kMonomialCap) {
    quadrature_rows(model, grid, dt, kMonomialCap + 1, degree, auto_quad_nodes(degree), 8,
                    m.gamma.data(), degree + 1);
    m.backend_tag = "closed_form+quadrature";
  } else {
    m.backend_tag = "closed_form";
  }
  mixture_tail(model, grid, dt, m.tail_q, m.tail_w);
  m.config.backend = GammaBackend::ClosedForm;
  return m;
}

MomentMatrix gamma_quadrature(const ModelSpec& model, const ChebGrid& grid, double dt,
                              int quad_nodes, int quad_panels) {
  check_build_inputs(model, grid, dt);
  if (!model.has_increment_mixture())
    throw std::invalid_argument("gamma_quadrature: model has no transition density");
  const int degree = grid.degree[0];
  if (quad_nodes == 0) quad_nodes = auto_quad_nodes(degree);
  if (quad_nodes < auto_quad_nodes(degree))
    throw std::invalid_argument("gamma_quadrature: quad_nodes must be at least 4(N+1)");
  if (quad_panels < 1)
    throw std::invalid_argument("gamma_quadrature: need at least one panel");
  MomentMatrix m = make_shell(model, grid, dt);
  quadrature_rows(model, grid, dt, 0, degree, quad_nodes, quad_panels, m.gamma.data(),
                  degree + 1);
  mixture_tail(model, grid, dt, m.tail_q, m.tail_w);
  m.config.backend = GammaBackend::Quadrature;
  m.config.quad_nodes = quad_nodes;
  m.config.quad_panels = quad_panels;
  m.backend_tag = "quadrature";
  return m;
}

MomentMatrix gamma_fourier(const ModelSpec& model, const ChebGrid& grid, double dt,
                           double xi_max, int n_cc) {
  check_build_inputs(model, grid, dt);
  if (!model.has_characteristic_fn())
    throw std::invalid_argument("gamma_fourier: model has no characteristic function");
  if (!(xi_max > 0.0))
    throw std::invalid_argument("gamma_fourier: xi_max must be positive");
  if (n_cc < 8) throw std::invalid_argument("gamma_fourier: n_cc too small");

  MomentMatrix m = make_shell(model, grid, dt);
  const int degree = grid.degree[0];
  const int np = degree + 1;
  const double lo = grid.domain.lo[0];
  const double hi = grid.domain.hi[0];
  const double half = 0.5 * (hi - lo);
  const double center = 0.5 * (hi + lo);
  const double pref = half / (2.0 * kPi);

  const QuadRule cc = clenshaw_curtis(-xi_max, xi_max, n_cc);
  const std::size_t q = cc.x.size();

  // Planar tables of That_j(half * xi) over the quadrature nodes.
  std::vector<double> tr(static_cast<std::size_t>(np) * q), ti(tr.size());
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (std::size_t i = 0; i < q; ++i) {
    const auto that = cheb_fourier(degree, half * cc.x[i]);
    for (int j = 0; j < np; ++j) {
      tr[static_cast<std::size_t>(j) * q + i] = that[j].real();
      ti[static_cast<std::size_t>(j) * q + i] = that[j].imag();
    }
  }

  // Weighted conjugate characteristic function phi(-xi) w_i.
  std::vector<double> cr(q), ci(q);
  for (std::size_t i = 0; i < q; ++i) {
    const std::complex<double> v = std::conj(characteristic_fn(model, cc.x[i], dt)) * cc.w[i];
    cr[i] = v.real();
    ci[i] = v.imag();
  }

  double worst_imag = 0.0, worst_over = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst_imag, worst_over) \
    if (parallel_enabled())
  for (int k = 0; k < np; ++k) {
    const double xk = grid.nodes[0][k];
    std::vector<double> pr(q), pi(q);
    for (std::size_t i = 0; i < q; ++i) {
      const double phase = cc.x[i] * (center - xk);
      const double cp = std::cos(phase), sp = std::sin(phase);
      pr[i] = cp * cr[i] - sp * ci[i];
      pi[i] = cp * ci[i] + sp * cr[i];
    }
    std::vector<double> y1(np), y2(np), y3(np), y4(np);
    matvec(tr.data(), np, q, pr.data(), y1.data());
    matvec(ti.data(), np, q, pi.data(), y2.data());
    matvec(tr.data(), np, q, pi.data(), y3.data());
    matvec(ti.data(), np, q, pr.data(), y4.data());
    for (int j = 0; j < np; ++j) {
      const double im = pref * (y3[j] + y4[j]);
      worst_imag = std::max(worst_imag, std::fabs(im));
      const double re = pref * (y1[j] - y2[j]);
      worst_over = std::max(worst_over, std::fabs(re) - 1.0);
      m.gamma[static_cast<std::size_t>(j) * np + k] = std::clamp(re, -1.0 - 1e-6, 1.0 + 1e-6);
    }
  }
  if (worst_imag >= 1e-8)
    throw std::runtime_error(
        "gamma_fourier: imaginary residue " + std::to_string(worst_imag) +
        " exceeds 1e-8; increase xi_max");
  // |Gamma| <= 1 analytically; a material overshoot means the oscillatory
  // integral is under-resolved even when the imaginary parts cancel by
  // symmetry, so refuse to return the matrix.
  if (worst_over >= 1e-4)
    throw std::runtime_error("gamma_fourier: moment values overshoot [-1, 1] by " +
                             std::to_string(worst_over) + "; increase cc_nodes");

  mixture_tail(model, grid, dt, m.tail_q, m.tail_w);
  m.config.backend = GammaBackend::Fourier;
  m.config.xi_max = xi_max;
  m.config.cc_nodes = n_cc;
  m.backend_tag = "fourier";
  return m;
}

MomentMatrix gamma_mc(const ModelSpec& model, const ChebGrid& grid, double dt,
                      std::uint64_t n_paths, std::uint64_t seed, const StepSimConfig& sim) {
  return gamma_mc_impl(model, grid, dt, n_paths, seed, sim, false);
}

MomentMatrix gamma_mc_reference(const ModelSpec& model, const ChebGrid& grid, double dt,
                                std::uint64_t n_paths, std::uint64_t seed,
                                const StepSimConfig& sim) {
  return gamma_mc_impl(model, grid, dt, n_paths, seed, sim, true);
}

MomentMatrix build_moment_matrix(const ModelSpec& model, const ChebGrid& grid, double dt,
                                 const MomentMatrixConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  MomentMatrix m;
  switch (cfg.backend) {
    case GammaBackend::ClosedForm:
      m = gamma_closed_form(model, grid, dt);
      break;
    case GammaBackend::Quadrature:
      m = gamma_quadrature(model, grid, dt, cfg.quad_nodes, cfg.quad_panels);
      break;
    case GammaBackend::Fourier:
      m = gamma_fourier(model, grid, dt, cfg.xi_max, cfg.cc_nodes);
      break;
    case GammaBackend::MonteCarlo:
      m = gamma_mc(model, grid, dt, cfg.mc_paths, cfg.seed, cfg.sim);
      break;
  }
  m.offline_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::vector<double> truncated_normal_moments(double mu, double s, double a, double b,
                                             int L) {
  if (!(s > 0.0))
    throw std::invalid_argument("truncated_normal_moments: s must be positive");
  if (!(a < b))
    throw std::invalid_argument("truncated_normal_moments: need a < b");
  if (L < 0 || L > 60)
    throw std::invalid_argument("truncated_normal_moments: L must be in [0, 60]");

  const f128 alpha = std::isinf(a) ? f128(-HUGE_VALQ) : (f128(a) - mu) / s;
  const f128 beta = std::isinf(b) ? f128(HUGE_VALQ) : (f128(b) - mu) / s;
  std::vector<f128> mt(L + 1);
  std_trunc_moments_q(alpha, beta, L, mt.data());

  const std::vector<f128> binom = binom_table_q(L);
  const std::size_t bw = static_cast<std::size_t>(L) + 1;
  std::vector<f128> mupow(bw), spow(bw);
  mupow[0] = 1;
  spow[0] = 1;
  for (int i = 1; i <= L; ++i) {
    mupow[i] = mupow[i - 1] * mu;
    spow[i] = spow[i - 1] * s;
  }
  std::vector<double> out(L + 1);
  for (int l = 0; l <= L; ++l) {
    f128 acc = 0;
    for (int i = 0; i <= l; ++i) acc += binom[l * bw + i] * mupow[l - i] * spow[i] * mt[i];
    out[l] = static_cast<double>(acc);
  }
  return out;
}

std::vector<double> tail_correction(const ModelSpec& model, const ChebGrid& grid, double dt,
                                    double strike) {
  check_build_inputs(model, grid, dt);
  if (!model.has_increment_mixture())
    throw std::invalid_argument(
        "tail_correction: closed form needs a mixture transition (CEV tails come from the "
        "Monte Carlo backend)");
  if (!(strike > 0.0)) throw std::invalid_argument("tail_correction: strike must be positive");
  const double lo = grid.domain.lo[0];
  const int np = grid.degree[0] + 1;
  std::vector<double> e(np);
  for (int k = 0; k < np; ++k) {
    const NormalMixture mix = increment_mixture(model, grid.nodes[0][k], dt);
    e[k] = std::clamp(strike * mix.cdf(lo) - mix.partial_exp(lo), 0.0, strike);
  }
  return e;
}

}  // namespace dc
