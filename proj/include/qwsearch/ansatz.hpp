#pragma once

// Scale analysis of the nonlinear search: the linear period T0, the
// nonlinear period T1, the self-consistent overlap
//
//     x(t) = (A pi / ln N) sin^2(C0 t / T0 + C1 x(t) t / T1),
//
// and the crossover time t_s between the two regimes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qwsearch/errors.hpp"
#include "qwsearch/reduced_model.hpp"

namespace qwsearch {

/// Prefactor of the first-peak overlap, p_bar ~ 4.3 / ln N, common to both
/// algorithms.
inline constexpr double kPeakOverlapPrefactor = 4.3;

/// Imbalance delta = |a|^2/4 - 4|b|^2/N at the overlap peak; the 4|b|^2/N
/// term is O(1/N) and dropped.
inline double peak_imbalance(std::int64_t n_vertices) {
  detail::check_vertex_count(n_vertices);
  return kPeakOverlapPrefactor / (4.0 * std::log(static_cast<double>(n_vertices)));
}

struct RegimePeriods {
  double T0 = 0.0;  // 1/E
  double T1 = 0.0;  // T0 / (c g delta_max)
};

inline RegimePeriods regime_periods(std::int64_t n_vertices, double g, double c) {
  if (!(g > 0.0) || !(c > 0.0)) throw DomainError("regime periods need g > 0 and c > 0");
  RegimePeriods p;
  p.T0 = 1.0 / characteristic_energy(n_vertices);
  p.T1 = p.T0 / (c * g * peak_imbalance(n_vertices));
  return p;
}

struct AnsatzParams {
  double A = 1.0;
  double C0 = 1.0;
  double C1 = 1.0;
  double T0 = 0.0;
  double T1 = 0.0;
  std::int64_t N = 0;

  /// Periods from regime_periods(N, g, c); requires T0 > T1 > 0.
  static AnsatzParams from_couplings(std::int64_t n_vertices, double g, double c, double A = 1.0, double C0 = 1.0,
                                     double C1 = 1.0) {
    const RegimePeriods periods = regime_periods(n_vertices, g, c);
    AnsatzParams p{A, C0, C1, periods.T0, periods.T1, n_vertices};
    p.validate();
    return p;
  }

  void validate() const {
    detail::check_vertex_count(N);
    if (!std::isfinite(A) || !std::isfinite(C0) || !std::isfinite(C1)) {
      throw DomainError("ansatz constants must be finite");
    }
    if (!(T0 > T1) || !(T1 > 0.0)) {
      throw DomainError("ansatz periods need T0 > T1 > 0 (T0 = " + std::to_string(T0) +
                        ", T1 = " + std::to_string(T1) + ")");
    }
  }

  double amplitude() const { return A * std::numbers::pi / std::log(static_cast<double>(N)); }

  /// Right-hand side of the fixed-point equation at time t.
  double map(double t, double x) const {
    const double s = std::sin(C0 * t / T0 + C1 * x * t / T1);
    return amplitude() * s * s;
  }
};

struct AnsatzPoint {
  double t = 0.0;
  double x = 0.0;         // |a(t)|^2
  double residual = 0.0;  // |x - map(t, x)|
  /// Past the first maximum of x, where continuation is no longer validated.
  bool extrapolated = false;
};

inline constexpr double kFixedPointTolerance = 1e-10;
inline constexpr int kFixedPointMaxIterations = 10000;

namespace detail {

/// Root of r(x) = x - map(t, x) on [0, amplitude], continued from x_seed.
/// Damped Newton first; if it stalls (fold of the branch), scan outward from
/// the seed for the nearest sign change of r and bisect.
inline double solve_fixed_point(const AnsatzParams& p, double t, double x_seed) {
  const double hi = std::abs(p.amplitude());
  auto r = [&](double x) { return x - p.map(t, x); };
  auto dr = [&](double x) {
    const double arg = p.C0 * t / p.T0 + p.C1 * x * t / p.T1;
    return 1.0 - p.amplitude() * std::sin(2.0 * arg) * p.C1 * t / p.T1;
  };

  int iterations = 0;
  double x = x_seed;
  for (int k = 0; k < 100; ++k, ++iterations) {
    const double rx = r(x);
    if (std::abs(rx) <= kFixedPointTolerance) return x;
    const double d = dr(x);
    if (d == 0.0 || !std::isfinite(d)) break;
    double step = rx / d;
    double lambda = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h, ++iterations) {
      const double trial = x - lambda * step;
      if (std::abs(r(trial)) < std::abs(rx)) {
        x = trial;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }

  // Bracketing fallback.  r(0) <= 0 <= r(hi) guarantees a root in [0, hi].
  const int cells = 2000;
  const double width = (hi > 0.0 ? hi : 1.0) / cells;
  const double seed = std::clamp(x_seed, 0.0, hi);
  double lo_x = 0.0, hi_x = 0.0;
  bool found = false;
  for (int k = 0; k < cells && !found; ++k) {
    for (const double dir : {1.0, -1.0}) {
      const double a = seed + dir * k * width;
      const double b = seed + dir * (k + 1) * width;
      const double left = std::min(a, b), right = std::max(a, b);
      iterations += 2;
      if (left < -width || right > hi + width) continue;
      if (r(left) * r(right) <= 0.0) {
        lo_x = left;
        hi_x = right;
        found = true;
        break;
      }
    }
  }
  if (!found || iterations > kFixedPointMaxIterations) {
    throw FixedPointError("ansatz fixed point did not converge", t);
  }
  double r_lo = r(lo_x);
  while (iterations++ < kFixedPointMaxIterations) {
    const double mid = 0.5 * (lo_x + hi_x);
    const double rm = r(mid);
    if (std::abs(rm) <= kFixedPointTolerance) return mid;
    if ((rm < 0.0) == (r_lo < 0.0)) {
      lo_x = mid;
      r_lo = rm;
    } else {
      hi_x = mid;
    }
    if (hi_x - lo_x < 1e-16) return mid;
  }
  throw FixedPointError("ansatz fixed point exceeded 10^4 iterations", t);
}

}  // namespace detail

/// Solves the self-consistent overlap on an increasing time grid, seeding each
/// point with the previous solution.
inline std::vector<AnsatzPoint> solve_ansatz(const AnsatzParams& params, std::span<const double> t_grid) {
  params.validate();
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
  std::vector<AnsatzPoint> out;
  out.reserve(t_grid.size());
  double x = 0.0;
  bool past_peak = false;
  for (const double t : t_grid) {
    x = detail::solve_fixed_point(params, t, x);
    if (!out.empty() && x < out.back().x) past_peak = true;
    out.push_back({t, x, std::abs(x - params.map(t, x)), past_peak});
  }
  return out;
}

struct TransitionEstimate {
  double t_s = 0.0;              // sqrt(T1 T0 ln N)
  double arcsin_argument = 0.0;  // sqrt(T1 ln N / T0)
};

/// Leading-order crossover time from (1/ln N) sin^2(t_s/T0) = T1/T0.
inline TransitionEstimate estimate_transition_time(std::int64_t n_vertices, double g, double c) {
  const RegimePeriods p = regime_periods(n_vertices, g, c);
  if (!(p.T1 < p.T0)) {
    throw RegimeOverlapError("nonlinear period T1 = " + std::to_string(p.T1) +
                             " is not shorter than the linear period T0 = " + std::to_string(p.T0));
  }
  const double log_n = std::log(static_cast<double>(n_vertices));
  return {std::sqrt(p.T1 * p.T0 * log_n), std::sqrt(p.T1 * log_n / p.T0)};
}

}  // namespace qwsearch
