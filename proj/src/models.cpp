#include "dc/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dc/rng.hpp"

namespace dc {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

ModelSpec ModelSpec::black_scholes(double rate, double sigma) {
  ModelSpec m;
  m.kind = Kind::BlackScholes;
  m.rate = rate;
  m.sigma = sigma;
  m.validate();
  return m;
}

ModelSpec ModelSpec::merton(double rate, double sigma, double intensity, double mean, double std) {
  ModelSpec m;
  m.kind = Kind::Merton;
  m.rate = rate;
  m.sigma = sigma;
  m.jump_intensity = intensity;
  m.jump_mean = mean;
  m.jump_std = std;
  m.validate();
  return m;
}

ModelSpec ModelSpec::cev(double rate, double sigma, double beta) {
  ModelSpec m;
  m.kind = Kind::CEV;
  m.rate = rate;
  m.sigma = sigma;
  m.cev_beta = beta;
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (!std::isfinite(rate) || !std::isfinite(sigma) || sigma <= 0.0)
    throw std::invalid_argument("ModelSpec: sigma must be positive and parameters finite");
  if (kind == Kind::Merton) {
    if (jump_intensity < 0.0 || jump_std < 0.0 || !std::isfinite(jump_mean))
      throw std::invalid_argument("ModelSpec: Merton requires lambda >= 0, beta >= 0, finite alpha");
  }
  if (kind == Kind::CEV) {
    if (!(cev_beta > 0.0) || cev_beta > 2.0)
      throw std::invalid_argument("ModelSpec: CEV beta must lie in (0, 2]");
  }
}

double ModelSpec::log_drift() const {
  switch (kind) {
    case Kind::BlackScholes:
      return rate - 0.5 * sigma * sigma;
    case Kind::Merton: {
      double kbar = std::exp(jump_mean + 0.5 * jump_std * jump_std) - 1.0;
      return rate - 0.5 * sigma * sigma - jump_intensity * kbar;
    }
    case Kind::CEV:
      throw std::invalid_argument("ModelSpec::log_drift: undefined for CEV");
  }
  return 0.0;
}

double ModelSpec::effective_sigma(double s0) const {
  switch (kind) {
    case Kind::BlackScholes:
      return sigma;
    case Kind::Merton:
      return std::sqrt(sigma * sigma +
                       jump_intensity * (jump_mean * jump_mean + jump_std * jump_std));
    case Kind::CEV:
      return sigma * std::pow(s0, 0.5 * cev_beta - 1.0);
  }
  return sigma;
}

double NormalMixture::cdf(double x) const {
  double s = 0.0;
  for (const auto& c : comp) s += c.weight * norm_cdf((x - c.mean) / c.stddev);
  return s;
}

double NormalMixture::pdf(double x) const {
  double s = 0.0;
  for (const auto& c : comp) {
    double z = (x - c.mean) / c.stddev;
    s += c.weight * norm_pdf(z) / c.stddev;
  }
  return s;
}

double NormalMixture::partial_exp(double x) const {
  double s = 0.0;
  for (const auto& c : comp) {
    double v = c.stddev * c.stddev;
    s += c.weight * std::exp(c.mean + 0.5 * v) * norm_cdf((x - c.mean - v) / c.stddev);
  }
  return s;
}

NormalMixture increment_mixture(const ModelSpec& model, double x0, double dt) {
  if (!model.has_increment_mixture())
    throw std::invalid_argument("increment_mixture: CEV has no normal-mixture transition");
  if (!(dt > 0.0)) throw std::invalid_argument("increment_mixture: dt must be positive");
  NormalMixture mix;
  const double drift = model.log_drift();
  if (model.kind == ModelSpec::Kind::BlackScholes || model.jump_intensity == 0.0) {
    mix.comp.push_back({1.0, x0 + drift * dt, model.sigma * std::sqrt(dt)});
    return mix;
  }
  const double lam = model.jump_intensity * dt;
  double weight = std::exp(-lam);
  double cum = 0.0;
  int m = 0;
  while (cum < 1.0 - kMixtureTailTol && m < 400) {
    if (m > 0) weight *= lam / m;
    mix.comp.push_back({weight, x0 + drift * dt + m * model.jump_mean,
                        std::sqrt(model.sigma * model.sigma * dt +
                                  m * model.jump_std * model.jump_std)});
    cum += weight;
    ++m;
  }
  mix.truncation_deficit = 1.0 - cum;
  return mix;
}

std::complex<double> characteristic_fn(const ModelSpec& model, double z, double dt) {
  if (!model.has_characteristic_fn())
    throw std::invalid_argument("characteristic_fn: not available for CEV");
  const std::complex<double> iz(0.0, z);
  std::complex<double> expo = iz * model.log_drift() - 0.5 * model.sigma * model.sigma * z * z;
  if (model.kind == ModelSpec::Kind::Merton && model.jump_intensity > 0.0) {
    std::complex<double> jump =
        std::exp(iz * model.jump_mean - 0.5 * model.jump_std * model.jump_std * z * z) - 1.0;
    expo += model.jump_intensity * jump;
  }
  return std::exp(dt * expo);
}

std::vector<double> simulate_one_step(const ModelSpec& model, double x0, double dt,
                                      std::uint64_t n_draws, std::uint64_t seed,
                                      const StepSimConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_one_step: dt must be positive");
  std::vector<double> out(n_draws);
  Rng rng(seed);
  if (model.kind != ModelSpec::Kind::CEV) {
    const double drift = model.log_drift() * dt;
    const double diff = model.sigma * std::sqrt(dt);
    const double lam = model.jump_intensity * dt;
    const bool jumps = model.kind == ModelSpec::Kind::Merton && model.jump_intensity > 0.0;
    for (std::uint64_t i = 0; i < n_draws; ++i) {
      double mean = x0 + drift;
      double var = diff * diff;
      if (jumps) {
        int m = rng.next_poisson(lam);
        mean += m * model.jump_mean;
        var += m * model.jump_std * model.jump_std;
      }
      out[i] = mean + std::sqrt(var) * rng.next_normal();
    }
    return out;
  }
  // CEV: full-truncation Euler in the price, n_sub sub-steps per dt.
  const int nsub = cfg.n_sub;
  const double h = dt / nsub;
  const double sqh = std::sqrt(h);
  const double halfbeta = 0.5 * model.cev_beta;
  const double s_start = std::exp(x0);
  for (std::uint64_t i = 0; i < n_draws; ++i) {
    double s = s_start;
    bool absorbed = false;
    for (int k = 0; k < nsub; ++k) {
      double spos = s > 0.0 ? s : 0.0;
      s += model.rate * spos * h + model.sigma * std::pow(spos, halfbeta) * sqh * rng.next_normal();
      if (s <= cfg.absorb_floor) {
        absorbed = true;
        break;
      }
    }
    out[i] = absorbed ? -std::numeric_limits<double>::infinity() : std::log(s);
  }
  return out;
}

std::vector<double> simulate_one_step_antithetic(const ModelSpec& model, double x0,
                                                 double dt, std::uint64_t n_draws,
                                                 std::uint64_t seed,
                                                 const StepSimConfig& cfg) {
  if (!(dt > 0.0))
    throw std::invalid_argument("simulate_one_step_antithetic: dt must be positive");
  std::vector<double> out(n_draws);
  Rng rng(seed);
  if (model.kind != ModelSpec::Kind::CEV) {
    const double drift = model.log_drift() * dt;
    const double diff = model.sigma * std::sqrt(dt);
    const double lam = model.jump_intensity * dt;
    const bool jumps = model.kind == ModelSpec::Kind::Merton && model.jump_intensity > 0.0;
    for (std::uint64_t i = 0; i < n_draws; i += 2) {
      double mean = x0 + drift;
      double var = diff * diff;
      if (jumps) {
        int m = rng.next_poisson(lam);
        mean += m * model.jump_mean;
        var += m * model.jump_std * model.jump_std;
      }
      const double shock = std::sqrt(var) * rng.next_normal();
      out[i] = mean + shock;
      if (i + 1 < n_draws) out[i + 1] = mean - shock;
    }
    return out;
  }
  const int nsub = cfg.n_sub;
  const double h = dt / nsub;
  const double sqh = std::sqrt(h);
  const double halfbeta = 0.5 * model.cev_beta;
  const double s_start = std::exp(x0);
  std::vector<double> z(nsub);
  auto euler = [&](double sign) {
    double s = s_start;
    for (int k = 0; k < nsub; ++k) {
      double spos = s > 0.0 ? s : 0.0;
      s += model.rate * spos * h + model.sigma * std::pow(spos, halfbeta) * sqh * sign * z[k];
      if (s <= cfg.absorb_floor) return -std::numeric_limits<double>::infinity();
    }
    return std::log(s);
  };
  for (std::uint64_t i = 0; i < n_draws; i += 2) {
    for (int k = 0; k < nsub; ++k) z[k] = rng.next_normal();
    out[i] = euler(1.0);
    if (i + 1 < n_draws) out[i + 1] = euler(-1.0);
  }
  return out;
}

PutQuote european_put(const ModelSpec& model, double s0, double strike, double maturity) {
  if (model.kind == ModelSpec::Kind::CEV)
    throw std::invalid_argument("european_put: no closed form for CEV");
  if (!(s0 > 0.0) || !(strike > 0.0) || !(maturity > 0.0))
    throw std::invalid_argument("european_put: s0, strike, maturity must be positive");
  // Lognormal mixture over jump counts: given m jumps, log S_T - log S_0 is
  // N(b T + m alpha, sigma^2 T + m beta^2).
  NormalMixture mix = increment_mixture(model, 0.0, maturity);
  const double disc = std::exp(-model.rate * maturity);
  PutQuote q;
  for (const auto& c : mix.comp) {
    const double v = c.stddev;
    const double g = std::exp(c.mean + 0.5 * v * v);  // forward factor F_m / S0
    const double d2 = (std::log(s0 / strike) + c.mean) / v;
    const double d1 = d2 + v;
    q.price += c.weight * disc * (strike * norm_cdf(-d2) - s0 * g * norm_cdf(-d1));
    q.delta += c.weight * disc * (-g * norm_cdf(-d1));
    q.gamma += c.weight * disc * g * norm_pdf(d1) / (s0 * v);
  }
  return q;
}

}  // namespace dc
