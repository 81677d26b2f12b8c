#pragma once

#include <cmath>
#include <cstdint>

namespace dc {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derive an independent sub-stream seed for worker / node index k.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t s = k + 0x9E3779B97F4A7C15ULL;
  return seed ^ detail::splitmix64(s);
}

namespace detail {

/// 256-layer ziggurat tables for exp(-x^2/2) on x >= 0. x[i] decreasing,
/// f[i] = exp(-x[i]^2/2) increasing, x[255] = 0 by construction (the tail
/// cutoff r = x[0] is solved by bisection so the layer stack closes exactly).
struct ZigguratTable {
  double x[256];
  double f[256];
  double base_extent;  // v / f[0], sampling width of the base layer

  ZigguratTable() {
    auto closure_miss = [this](double r) {
      double tail = std::sqrt(std::acos(-1.0) / 2.0) * std::erfc(r / std::sqrt(2.0));
      double f0 = std::exp(-0.5 * r * r);
      double v = r * f0 + tail;
      base_extent = v / f0;
      x[0] = r;
      f[0] = f0;
      for (int i = 1; i < 256; ++i) {
        double arg = f[i - 1] + v / x[i - 1];
        if (arg >= 1.0) {
          // Stack closed early or exactly; report how far past 1 we land at the top.
          for (int q = i; q < 256; ++q) {
            x[q] = 0.0;
            f[q] = 1.0;
          }
          return arg - 1.0 + (255 - i) * 1.0;
        }
        x[i] = std::sqrt(-2.0 * std::log(arg));
        f[i] = arg;
      }
      return f[254] + v / x[254] - 1.0;
    };
    // Per-layer area v(r) = r f(r) + tail(r) is decreasing in r, so an early
    // closure (positive miss) means r is too small.
    double lo = 3.0, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (closure_miss(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    closure_miss(hi);
    x[255] = 0.0;
    f[255] = 1.0;
  }
};

inline const ZigguratTable& ziggurat_table() {
  static const ZigguratTable t;
  return t;
}

}  // namespace detail

/// Small deterministic RNG (splitmix64 core) with normal and Poisson draws.
/// Every instance is an independent stream; no shared state, safe per thread.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via 256-layer ziggurat.
  double next_normal() {
    const detail::ZigguratTable& zt = detail::ziggurat_table();
    for (;;) {
      std::uint64_t u = next_u64();
      int layer = static_cast<int>(u & 255u);
      double sign = (u & 256u) ? -1.0 : 1.0;
      double frac = static_cast<double>(u >> 11) * 0x1.0p-53;
      if (layer == 0) {
        double x = frac * zt.base_extent;
        if (x < zt.x[0]) return sign * x;
        // Tail beyond r.
        for (;;) {
          double a = -std::log(next_unit_pos()) / zt.x[0];
          double b = -std::log(next_unit_pos());
          if (2.0 * b > a * a) return sign * (zt.x[0] + a);
        }
      }
      double x = frac * zt.x[layer - 1];
      if (x < zt.x[layer]) return sign * x;
      double f_top = zt.f[layer], f_bottom = zt.f[layer - 1];
      if (f_bottom + next_unit() * (f_top - f_bottom) < std::exp(-0.5 * x * x))
        return sign * x;
    }
  }

  /// Poisson by inversion; intended for small means (mixture jump counts).
  int next_poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    double p = std::exp(-mean);
    double cum = p;
    double u = next_unit();
    int k = 0;
    while (u > cum && k < 400) {
      ++k;
      p *= mean / k;
      cum += p;
    }
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace dc
