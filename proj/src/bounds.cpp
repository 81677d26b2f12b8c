#include "dc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dc {

namespace {

constexpr double kOverflow = 1e308;

/// Kahan accumulator.
struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

BoundValue finish(double v) {
  if (!(v <= kOverflow))
    return {std::numeric_limits<double>::infinity(), true};
  return {v, false};
}

}  // namespace

void ErrorBoundInputs::validate() const {
  if (rho.empty() || rho.size() != degrees.size())
    throw std::invalid_argument("ErrorBoundInputs: rho and degrees must match and be nonempty");
  for (double r : rho)
    if (!(r > 1.0)) throw std::invalid_argument("ErrorBoundInputs: rho must exceed 1");
  for (int d : degrees)
    if (d < 0) throw std::invalid_argument("ErrorBoundInputs: degrees must be >= 0");
  if (!(b > 0.0)) throw std::invalid_argument("ErrorBoundInputs: B must be positive");
  if (!(lipschitz_f > 0.0))
    throw std::invalid_argument("ErrorBoundInputs: L_f must be positive");
  if (eps_tr < 0.0 || eps_gm < 0.0 || v_bar < 0.0)
    throw std::invalid_argument("ErrorBoundInputs: error terms must be nonnegative");
  if (n < 1 || u < 0 || u > n)
    throw std::invalid_argument("ErrorBoundInputs: need 0 <= u <= n, n >= 1");
  if (!eps_int_per_step.empty() &&
      eps_int_per_step.size() != static_cast<std::size_t>(n - u + 1))
    throw std::invalid_argument("ErrorBoundInputs: eps_int_per_step must have n-u+1 entries");
  if (!v_bar_per_step.empty() && v_bar_per_step.size() != static_cast<std::size_t>(n - u))
    throw std::invalid_argument("ErrorBoundInputs: v_bar_per_step must have n-u entries");
}

double eps_int(const std::vector<double>& rho, const std::vector<int>& degrees, double b) {
  if (rho.empty() || rho.size() != degrees.size())
    throw std::invalid_argument("eps_int: rho and degrees must match and be nonempty");
  if (!(b > 0.0)) throw std::invalid_argument("eps_int: B must be positive");
  const std::size_t d = rho.size();
  double prod = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (!(rho[j] > 1.0)) throw std::invalid_argument("eps_int: rho must exceed 1");
    prod /= 1.0 - std::pow(rho[j], -2.0);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) sum += std::pow(rho[i], -2.0 * degrees[i]);
  return std::pow(2.0, 0.5 * static_cast<double>(d) + 1.0) * b * std::sqrt(sum * prod);
}

double lebesgue_bound(const std::vector<int>& degrees) {
  double prod = 1.0;
  for (int ni : degrees) {
    if (ni < 0) throw std::invalid_argument("lebesgue_bound: degrees must be >= 0");
    prod *= 2.0 / std::numbers::pi * std::log(static_cast<double>(ni) + 1.0) + 1.0;
  }
  return prod;
}

BoundValue recursive_bound(const ErrorBoundInputs& in) {
  in.validate();
  const double lambda = lebesgue_bound(in.degrees);
  const double c = lambda * in.lipschitz_f * (1.0 + in.eps_gm);
  const double eps_const =
      in.eps_int_per_step.empty() ? eps_int(in.rho, in.degrees, in.b) : 0.0;

  Kahan total;
  double cpow = 1.0;
  for (int j = in.u; j <= in.n; ++j) {
    const double e =
        in.eps_int_per_step.empty() ? eps_const : in.eps_int_per_step[j - in.u];
    total.add(cpow * e);
    if (j < in.n) cpow *= c;
    if (!std::isfinite(total.sum) || !std::isfinite(cpow))
      return {std::numeric_limits<double>::infinity(), true};
  }
  cpow = 1.0;
  Kahan second;
  for (int j = in.u + 1; j <= in.n; ++j) {
    const double vb = in.v_bar_per_step.empty() ? in.v_bar
                                                : in.v_bar_per_step[j - in.u - 1];
    second.add(cpow * (in.eps_tr + in.eps_gm * vb));
    if (j < in.n) cpow *= c;
    if (!std::isfinite(second.sum) || !std::isfinite(cpow))
      return {std::numeric_limits<double>::infinity(), true};
  }
  total.add(lambda * in.lipschitz_f * second.sum);
  return finish(total.sum);
}

BoundValue simplified_bound(const ErrorBoundInputs& in) {
  in.validate();
  const double lambda = lebesgue_bound(in.degrees);
  const double c = lambda * in.lipschitz_f * (1.0 + in.eps_gm);
  const double ctilde = std::max(2.0, c);
  double eps = in.eps_int_per_step.empty()
                   ? eps_int(in.rho, in.degrees, in.b)
                   : *std::max_element(in.eps_int_per_step.begin(),
                                       in.eps_int_per_step.end());
  double vb = in.v_bar;
  if (!in.v_bar_per_step.empty())
    vb = std::max(vb, *std::max_element(in.v_bar_per_step.begin(),
                                        in.v_bar_per_step.end()));
  const double base = eps + in.eps_tr + in.eps_gm * vb;
  const double power = std::pow(ctilde, static_cast<double>(in.n + 1 - in.u));
  return finish(base * power);
}

double max_timesteps(double rho, const std::vector<int>& degrees, double lipschitz_f,
                     double c1) {
  if (!(rho > 1.0)) throw std::invalid_argument("max_timesteps: rho must exceed 1");
  if (degrees.empty()) throw std::invalid_argument("max_timesteps: degrees must be nonempty");
  if (!(lipschitz_f > 0.0))
    throw std::invalid_argument("max_timesteps: L_f must be positive");
  if (!(c1 > 0.0)) throw std::invalid_argument("max_timesteps: C_1 must be positive");
  const int n_min = *std::min_element(degrees.begin(), degrees.end());
  if (n_min < 0) throw std::invalid_argument("max_timesteps: degrees must be >= 0");
  const double denom = c1 * static_cast<double>(degrees.size()) *
                       (std::log(lebesgue_bound(degrees)) + std::log(lipschitz_f));
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log(rho) * static_cast<double>(n_min) / denom + 1.0;
}

}  // namespace dc
