#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace dc {

/// Risk-neutral log-price models: Black-Scholes, Merton jump diffusion, CEV.
struct ModelSpec {
  enum class Kind { BlackScholes, Merton, CEV };

  Kind kind = Kind::BlackScholes;
  double rate = 0.0;
  double sigma = 0.0;
  double jump_intensity = 0.0;  // Merton lambda
  double jump_mean = 0.0;       // Merton alpha
  double jump_std = 0.0;        // Merton beta
  double cev_beta = 0.0;        // CEV exponent in dS = r S dt + sigma S^{beta/2} dW

  static ModelSpec black_scholes(double rate, double sigma);
  static ModelSpec merton(double rate, double sigma, double intensity, double mean, double std);
  static ModelSpec cev(double rate, double sigma, double beta);

  void validate() const;
  bool has_increment_mixture() const { return kind != Kind::CEV; }
  bool has_characteristic_fn() const { return kind != Kind::CEV; }

  /// Risk-neutral log-drift per unit time (BS/Merton).
  double log_drift() const;

  /// Effective diffusive scale used by the domain sizing rule.
  double effective_sigma(double s0) const;
};

/// Finite normal mixture for the law of X_{t + dt} given X_t = x0 (log-price).
struct NormalMixture {
  struct Component {
    double weight;
    double mean;
    double stddev;
  };
  std::vector<Component> comp;
  double truncation_deficit = 0.0;

  double cdf(double x) const;
  double pdf(double x) const;
  /// E[e^X 1{X < x}] for the mixture.
  double partial_exp(double x) const;
};

/// Jump-count tail mass dropped below this level when truncating the Merton mixture.
inline constexpr double kMixtureTailTol = 1e-12;

NormalMixture increment_mixture(const ModelSpec& model, double x0, double dt);

/// Characteristic function of the increment X_{dt} - X_0 (BS/Merton only).
std::complex<double> characteristic_fn(const ModelSpec& model, double z, double dt);

/// One-step simulation of X_{dt} given X_0 = x0; M iid draws, deterministic in seed.
/// CEV uses full-truncation Euler with n_sub sub-steps and reports absorption at the
/// floor as -infinity log-price.
struct StepSimConfig {
  int n_sub = 16;
  double absorb_floor = 1e-8;
};
std::vector<double> simulate_one_step(const ModelSpec& model, double x0, double dt,
                                      std::uint64_t n_draws, std::uint64_t seed,
                                      const StepSimConfig& cfg = {});

/// Antithetic variant: draws come in mirrored pairs (shared jump count, negated
/// Gaussian; for CEV the whole sub-step sequence is negated), the last draw
/// unpaired when n_draws is odd. Each draw still has the exact one-step law;
/// pairing cancels the odd noise component, which otherwise dominates moment
/// estimates that feed long backward inductions.
std::vector<double> simulate_one_step_antithetic(const ModelSpec& model, double x0,
                                                 double dt, std::uint64_t n_draws,
                                                 std::uint64_t seed,
                                                 const StepSimConfig& cfg = {});

struct PutQuote {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
};

/// European put closed form: exact for Black-Scholes, jump-count series for Merton
/// (truncated at the same tail tolerance as the mixture). CEV is rejected.
PutQuote european_put(const ModelSpec& model, double s0, double strike, double maturity);

/// Standard normal CDF / PDF helpers.
double norm_cdf(double x);
double norm_pdf(double x);

}  // namespace dc
