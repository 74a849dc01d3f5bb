#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "qwsearch/reduced_model.hpp"

namespace qwsearch {
namespace {

TEST(Energy, ReferenceValues) {
  EXPECT_NEAR(characteristic_energy(900), 0.09061138258322031, 1e-15);
  EXPECT_NEAR(characteristic_energy(400), 0.1448232986098914, 1e-15);
  EXPECT_NEAR(default_nonlinear_coupling(900), 2.165269502890975, 1e-14);
  EXPECT_NEAR(default_rescaling(900), 5.518070530937814, 1e-12);
  EXPECT_NEAR(default_rescaling(900, RescalingChoice::inverse_energy), 2.0 * 5.518070530937814, 1e-12);
}

TEST(Energy, RejectsBadVertexCounts) {
  EXPECT_THROW(characteristic_energy(9), DomainError);
  EXPECT_THROW(characteristic_energy(899), DomainError);
  EXPECT_THROW(characteristic_energy(225), DomainError);
  EXPECT_THROW(default_nonlinear_coupling(0), DomainError);
}

TEST(Eigensystem, LinearLimit) {
  const double e = characteristic_energy(900);
  const ReducedEigensystem es = reduced_eigensystem(0.0, 2.0, 5.0, e);
  EXPECT_NEAR(es.e_plus, e, 1e-15);
  EXPECT_NEAR(es.e_minus, -e, 1e-15);
  EXPECT_NEAR(es.coupling, e, 1e-15);
  EXPECT_NEAR(es.v_plus[0], 1.0, 1e-15);
  EXPECT_NEAR(es.v_minus[0], -1.0, 1e-15);
}

TEST(Eigensystem, SolvesTwoLevelEigenproblem) {
  const double e = characteristic_energy(900);
  const double g = default_nonlinear_coupling(900);
  const double c = default_rescaling(900);
  for (const double delta : {-4.0 / 900.0, 0.0, 0.05, 0.1575, 0.25}) {
    const ReducedEigensystem es = reduced_eigensystem(delta, g, c, e);
    const double coupling = e * (1.0 + c * g * delta);
    // Basis order (Gamma, s): H' = [[0, E~], [E~, g delta]].
    Eigen::Matrix2d h;
    h << 0.0, coupling, coupling, g * delta;
    const Eigen::Vector2d ref = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(h).eigenvalues();
    EXPECT_NEAR(es.e_minus, ref(0), 1e-12);
    EXPECT_NEAR(es.e_plus, ref(1), 1e-12);
    for (const auto& [lambda, v] : {std::pair{es.e_plus, es.v_plus}, std::pair{es.e_minus, es.v_minus}}) {
      const double vs = v[0], vg = v[1];
      EXPECT_NEAR(coupling * vs, lambda * vg, 1e-12);
      EXPECT_NEAR(coupling * vg + g * delta * vs, lambda * vs, 1e-12);
    }
  }
}

TEST(Eigensystem, DegenerateCoupling) {
  EXPECT_THROW(reduced_eigensystem(-1.0, 1.0, 1.0, 0.1), DegenerateCouplingError);
  EXPECT_THROW(reduced_eigensystem(0.0, 1.0, 1.0, 0.0), DomainError);
}

TEST(CouplingBounds, ReferenceValuesAtN900) {
  const CouplingBounds b = c_bounds(900, default_nonlinear_coupling(900));
  EXPECT_NEAR(b.c_min, 5.518070530937814, 1e-12);
  EXPECT_NEAR(b.c_max, 103.91316171016571, 1e-10);
}

TEST(CouplingBounds, InfeasibleWhenGIsTooLarge) {
  try {
    c_bounds(16, 100.0);
    FAIL() << "expected InfeasibleCouplingError";
  } catch (const InfeasibleCouplingError& e) {
    EXPECT_NEAR(e.c_max(), 0.04, 1e-15);
    EXPECT_GT(e.c_min(), e.c_max());
    EXPECT_NE(std::string(e.what()).find("c_max"), std::string::npos);
  }
  EXPECT_THROW(c_bounds(900, 0.0), DomainError);
  EXPECT_THROW(c_bounds(901, 1.0), DomainError);
}

TEST(EvolveReduced, LinearRabiOscillation) {
  const double e = characteristic_energy(900);
  const ReducedSeries series = evolve_reduced({}, 900, 0.0, 0.0, 0.01, 40.0);
  ASSERT_EQ(series.size(), 4001u);
  for (const auto& s : series) {
    EXPECT_NEAR(s.p_gamma, std::pow(std::sin(e * s.t), 2), 1e-10);
    EXPECT_NEAR(s.norm_sq, 1.0, 1e-10);
  }
}

TEST(EvolveReduced, NonlinearRunConservesNormAndIsDeterministic) {
  const double g = default_nonlinear_coupling(900);
  const double c = default_rescaling(900);
  const ReducedSeries a = evolve_reduced({}, 900, g, c, 0.01, 30.0);
  const ReducedSeries b = evolve_reduced({}, 900, g, c, 0.01, 30.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].p_gamma, b[i].p_gamma);
    EXPECT_NEAR(a[i].norm_sq, 1.0, 1e-8);
    EXPECT_NEAR(a[i].delta, a[i].p_gamma / 4.0 - 4.0 * (a[i].norm_sq - a[i].p_gamma) / 900.0, 1e-15);
  }
  EXPECT_NEAR(a.front().delta, -4.0 / 900.0, 1e-15);
}

TEST(EvolveReduced, RejectsBadInputs) {
  EXPECT_THROW(evolve_reduced({{0.5, 0.0}, {0.5, 0.0}}, 900, 1.0, 1.0, 0.01, 1.0), DomainError);
  EXPECT_THROW(evolve_reduced({}, 900, 1.0, 1.0, 0.0, 1.0), ConfigError);
  EXPECT_THROW(evolve_reduced({}, 900, -1.0, 1.0, 0.01, 1.0), ConfigError);
}

}  // namespace
}  // namespace qwsearch
