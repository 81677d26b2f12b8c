#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dc/chebyshev.hpp"
#include "dc/models.hpp"

namespace dc {

enum class GammaBackend { ClosedForm, Quadrature, Fourier, MonteCarlo };

std::string to_string(GammaBackend b);
GammaBackend gamma_backend_from_string(const std::string& name);

struct MomentMatrixConfig {
  GammaBackend backend = GammaBackend::ClosedForm;
  int quad_nodes = 0;        // total Gauss-Legendre points across panels; 0 picks 4(N+1)
  int quad_panels = 8;
  double xi_max = 250.0;     // Fourier truncation bound
  int cc_nodes = 500;        // Clenshaw-Curtis point count for the Fourier integral
  std::uint64_t mc_paths = 10000;
  std::uint64_t seed = 1;
  StepSimConfig sim;         // one-step simulation settings (Monte Carlo backend)
};

/// Offline-phase product for a 1D grid: Gamma[j][k] = E[p_j(X_dt) | X_0 = x_k]
/// with p_j = T_j(to_unit(.)) restricted to the grid domain, plus the
/// strike-independent tail decomposition for the American-put correction
///   e_k(K) = K * tail_q[k] - tail_w[k],
/// where tail_q[k] = P(X_dt < lo | x_k) and tail_w[k] = E[e^{X_dt} 1{X_dt < lo} | x_k].
struct MomentMatrix {
  ChebGrid grid;
  double dt = 0.0;
  ModelSpec model;
  MomentMatrixConfig config;
  std::string backend_tag;         // "closed_form", "closed_form+quadrature", ...
  std::vector<double> gamma;       // (N+1) x (N+1) row-major, gamma[j*(N+1)+k]
  std::vector<double> tail_q;
  std::vector<double> tail_w;
  std::map<double, std::vector<double>> tail_by_strike;
  double offline_seconds = 0.0;

  int n() const { return grid.degree[0]; }
  double at(int j, int k) const { return gamma[static_cast<std::size_t>(j) * (n() + 1) + k]; }

  /// Hash of model + dt + grid identity.
  std::uint64_t fingerprint() const;

  /// e_k(K) = clamp(K * tail_q - tail_w, 0, K), materialized once per strike.
  const std::vector<double>& tail_for_strike(double strike);
};

/// Dispatch on cfg.backend; stamps config, backend tag, and offline runtime.
MomentMatrix build_moment_matrix(const ModelSpec& model, const ChebGrid& grid, double dt,
                                 const MomentMatrixConfig& cfg);

/// Truncated-moments route (BS/Merton). Rows j <= 50 come from per-component
/// truncated normal moments against the monomial expansion of T_j, evaluated in
/// quad precision internally; rows j > 50 are delegated to the quadrature
/// backend and the backend tag records the hybrid.
MomentMatrix gamma_closed_form(const ModelSpec& model, const ChebGrid& grid, double dt);

/// Density route: Gauss-Legendre panels against the transition density.
MomentMatrix gamma_quadrature(const ModelSpec& model, const ChebGrid& grid, double dt,
                              int quad_nodes = 0, int quad_panels = 8);

/// Parseval route against the increment characteristic function.
MomentMatrix gamma_fourier(const ModelSpec& model, const ChebGrid& grid, double dt,
                           double xi_max = 250.0, int n_cc = 500);

/// Monte Carlo route: per-node one-step simulation (antithetic pairs) with
/// derived sub-streams.
MomentMatrix gamma_mc(const ModelSpec& model, const ChebGrid& grid, double dt,
                      std::uint64_t n_paths, std::uint64_t seed,
                      const StepSimConfig& sim = {});

/// Plain-loop reference for gamma_mc (no lane interleaving); for kernel testing.
MomentMatrix gamma_mc_reference(const ModelSpec& model, const ChebGrid& grid, double dt,
                                std::uint64_t n_paths, std::uint64_t seed,
                                const StepSimConfig& sim = {});

/// E[X^l 1_{[a,b]}(X)] for X ~ Normal(mu, s^2), l = 0..L (L <= 60). a = -inf and
/// b = +inf are accepted.
std::vector<double> truncated_normal_moments(double mu, double s, double a, double b, int L);

/// Closed-form tail vector for mixture models: e_k = E[(K - e^{X_dt}) 1{X_dt < lo} | x_k].
std::vector<double> tail_correction(const ModelSpec& model, const ChebGrid& grid, double dt,
                                    double strike);

void save_cache(const MomentMatrix& m, const std::string& path);

/// Load and verify against the requesting configuration: the stored model /
/// dt / grid fingerprint and the backend identity (including MC paths and seed)
/// must match, otherwise the cache is stale and loading is refused.
MomentMatrix load_cache(const std::string& path, const ModelSpec& expect_model,
                        const ChebGrid& expect_grid, double expect_dt,
                        const MomentMatrixConfig& expect_cfg);

}  // namespace dc
