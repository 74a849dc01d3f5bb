#pragma once

// Two-level description of the search in span{|Gamma>, |s>}.
//
// With a = <Gamma|psi>, b = <s|psi> and delta = |a|^2/4 - 4|b|^2/N, the
// phase-shifted Hamiltonian in the (a, b) basis is
//
//     H' = [[0, E~], [E~, g delta]],   E~ = E (1 + c g delta),
//
// where E = sqrt(16 pi / (N ln N)) is the magnitude of the two eigenvalues of
// H_L closest to zero.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qwsearch/errors.hpp"

namespace qwsearch {

inline constexpr double kTwoLevelTolerance = 1e-9;

namespace detail {

inline void check_vertex_count(std::int64_t n) {
  if (n < 16) throw DomainError("N must be at least 16, got " + std::to_string(n));
  const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n || side % 2 != 0) {
    throw DomainError("N = " + std::to_string(n) + " is not the square of an even side");
  }
}

}  // namespace detail

inline double characteristic_energy(std::int64_t n_vertices) {
  detail::check_vertex_count(n_vertices);
  const double n = static_cast<double>(n_vertices);
  return std::sqrt(16.0 * std::numbers::pi / (n * std::log(n)));
}

/// g = ln N / pi, which keeps g delta of order one.
inline double default_nonlinear_coupling(std::int64_t n_vertices) {
  detail::check_vertex_count(n_vertices);
  return std::log(static_cast<double>(n_vertices)) / std::numbers::pi;
}

enum class RescalingChoice {
  half_inverse_energy,  // c = 1/(2E); 5.52 at N = 900
  inverse_energy,       // c = 1/E
};

inline double default_rescaling(std::int64_t n_vertices, RescalingChoice choice = RescalingChoice::half_inverse_energy) {
  const double e = characteristic_energy(n_vertices);
  return choice == RescalingChoice::inverse_energy ? 1.0 / e : 0.5 / e;
}

/// Eigenpairs of H'.  Eigenvector components are listed in the order
/// (s-component, Gamma-component), the ordering in which (x, 1) with
/// x = (g delta +- sqrt((g delta)^2 + 4 E~^2)) / (2 E~) solves the eigen-equation.
/// Vectors are not normalised.
struct ReducedEigensystem {
  double e_plus = 0.0;
  double e_minus = 0.0;
  std::array<double, 2> v_plus{};
  std::array<double, 2> v_minus{};
  double coupling = 0.0;  // E~
};

inline ReducedEigensystem reduced_eigensystem(double delta, double g, double c, double energy) {
  if (!(energy > 0.0)) throw DomainError("characteristic energy must be positive");
  const double coupling = energy * (1.0 + c * g * delta);
  if (coupling == 0.0) {
    throw DegenerateCouplingError("rescaled coupling E(1 + c g delta) vanishes");
  }
  const double detuning = g * delta;
  const double root = std::sqrt(detuning * detuning + 4.0 * coupling * coupling);
  ReducedEigensystem es;
  es.coupling = coupling;
  es.e_plus = 0.5 * detuning + 0.5 * root;
  es.e_minus = 0.5 * detuning - 0.5 * root;
  es.v_plus = {(detuning + root) / (2.0 * coupling), 1.0};
  es.v_minus = {(detuning - root) / (2.0 * coupling), 1.0};
  return es;
}

struct CouplingBounds {
  double c_min = 0.0;  // 1/(2E), leading term of the lower bound
  double c_max = 0.0;  // N/(4g), from delta(0) = -4/N
};

inline CouplingBounds c_bounds(std::int64_t n_vertices, double g) {
  if (!(g > 0.0)) throw DomainError("c bounds need g > 0");
  detail::check_vertex_count(n_vertices);
  const double n = static_cast<double>(n_vertices);
  CouplingBounds b;
  b.c_min = 0.5 * std::sqrt(n * std::log(n) / (16.0 * std::numbers::pi));
  b.c_max = n / (4.0 * g);
  if (!(b.c_min < b.c_max)) {
    throw InfeasibleCouplingError("no feasible rescaling: c_min = " + std::to_string(b.c_min) +
                                      " >= c_max = N/(4g) = " + std::to_string(b.c_max) +
                                      " (g cannot scale faster than sqrt(N))",
                                  b.c_min, b.c_max);
  }
  return b;
}

struct TwoLevelState {
  std::complex<double> a{0.0, 0.0};  // Gamma amplitude
  std::complex<double> b{1.0, 0.0};  // s amplitude
};

struct ReducedSample {
  double t = 0.0;
  double p_gamma = 0.0;  // |a|^2
  double delta = 0.0;
  double norm_sq = 1.0;
};

using ReducedSeries = std::vector<ReducedSample>;

/// RK4 integration of i d/dt (a, b) = H'(a, b) with delta recomputed from
/// (a, b) at every stage.
inline ReducedSeries evolve_reduced(TwoLevelState init, std::int64_t n_vertices, double g, double c, double dt,
                                    double t_max) {
  using C = std::complex<double>;
  if (!(dt > 0.0) || !(t_max > 0.0)) throw ConfigError("dt and t_max must be positive");
  if (g < 0.0 || c < 0.0) throw ConfigError("couplings must be non-negative");
  const double n0 = std::norm(init.a) + std::norm(init.b);
  if (std::abs(n0 - 1.0) > kTwoLevelTolerance) throw DomainError("two-level state is not normalised");

  const double energy = characteristic_energy(n_vertices);
  const double n = static_cast<double>(n_vertices);
  const C minus_i{0.0, -1.0};
  auto delta_of = [n](C a, C b) { return std::norm(a) / 4.0 - 4.0 * std::norm(b) / n; };
  auto rhs = [&](C a, C b) -> std::array<C, 2> {
    const double d = delta_of(a, b);
    const double coupling = energy * (1.0 + c * g * d);
    return {minus_i * (coupling * b), minus_i * (coupling * a + g * d * b)};
  };

  ReducedSeries out;
  const auto steps = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
  out.reserve(static_cast<std::size_t>(steps) + 1);
  C a = init.a;
  C b = init.b;
  out.push_back({0.0, std::norm(a), delta_of(a, b), n0});
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto k1 = rhs(a, b);
    const auto k2 = rhs(a + 0.5 * dt * k1[0], b + 0.5 * dt * k1[1]);
    const auto k3 = rhs(a + 0.5 * dt * k2[0], b + 0.5 * dt * k2[1]);
    const auto k4 = rhs(a + dt * k3[0], b + dt * k3[1]);
    a += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    b += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    const double t = static_cast<double>(k + 1) * dt;
    const double norm = std::norm(a) + std::norm(b);
    if (std::abs(norm - n0) > 1e-6) throw IntegrationError("two-level norm drift above 1e-6", t - dt);
    out.push_back({t, std::norm(a), delta_of(a, b), norm});
  }
  return out;
}

}  // namespace qwsearch
