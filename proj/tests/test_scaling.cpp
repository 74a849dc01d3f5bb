#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qwsearch/scaling.hpp"

namespace qwsearch {
namespace {

SweepResult synthetic_rows(auto&& quantity) {
  SweepResult r;
  for (const int L : {10, 14, 20, 28, 40, 56, 64}) {
    SweepRow row;
    row.N = static_cast<std::int64_t>(L) * L;
    row.L = L;
    const double v = quantity(static_cast<double>(row.N));
    row.T = v;
    row.p_bar = v;
    row.peak_width = v;
    r.rows.push_back(row);
  }
  return r;
}

void expect_same_rows(const SweepResult& a, const SweepResult& b) {
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].N, b.rows[i].N);
    EXPECT_EQ(a.rows[i].T, b.rows[i].T);
    EXPECT_EQ(a.rows[i].p_bar, b.rows[i].p_bar);
    EXPECT_EQ(a.rows[i].peak_width, b.rows[i].peak_width);
    EXPECT_EQ(a.rows[i].error, b.rows[i].error);
  }
}

TEST(PeakWidth, SineSquaredClosedForm) {
  const double t2 = 1.3;
  TimeSeries s;
  for (int k = 0; k <= 12000; ++k) {
    const double t = k * 1e-3;
    s.samples.push_back({t, std::pow(std::sin(t / (2.0 * t2)), 2), 0.0, 0.0, 1.0});
  }
  EXPECT_NEAR(peak_width(s), std::numbers::pi * t2, 1e-5);
}

TEST(PeakWidth, UnbracketedCrossing) {
  TimeSeries s;
  for (int k = 0; k <= 320; ++k) {
    const double t = k * 0.01;
    s.samples.push_back({t, 0.4 * std::pow(std::sin(t / 1.5), 2) + 0.05, 0.0, 0.0, 1.0});
  }
  EXPECT_THROW(peak_width(s), WidthError);
}

TEST(FitScaling, RecoversQuarterPowerExactly) {
  const SweepResult r = synthetic_rows([](double n) { return 2.0 * std::pow(n, 0.25) * std::pow(std::log(n), 0.75); });
  const ScalingFit fit = fit_scaling(r, Quantity::T, FitModel::quarter_power());
  EXPECT_NEAR(fit.beta, 0.25, 1e-6);
  EXPECT_NEAR(fit.prefactor, 2.0, 1e-6);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_EQ(fit.gamma, 0.75);
  EXPECT_EQ(fit.rows_used, 7u);
}

TEST(FitScaling, RecoversSqrtNLogNExactly) {
  const SweepResult r = synthetic_rows([](double n) { return 0.7 * std::sqrt(n * std::log(n)); });
  const ScalingFit fit = fit_scaling(r, Quantity::T, FitModel::sqrt_NlogN());
  EXPECT_NEAR(fit.beta, 0.5, 1e-9);
  EXPECT_NEAR(fit.prefactor, 0.7, 1e-9);
}

TEST(FitScaling, InverseLogThroughOrigin) {
  const SweepResult r = synthetic_rows([](double n) { return 4.3 / std::log(n); });
  const ScalingFit fit = fit_scaling(r, Quantity::p_bar, FitModel::inverse_log());
  EXPECT_NEAR(fit.prefactor, 4.3, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitScaling, CustomWithFixedExponent) {
  const SweepResult r = synthetic_rows([](double n) { return 3.0 * std::log(n) / std::sqrt(n); });
  const ScalingFit fixed = fit_scaling(r, Quantity::peak_width, FitModel::custom(1.0, -0.5));
  EXPECT_NEAR(fixed.prefactor, 3.0, 1e-9);
  EXPECT_EQ(fixed.beta, -0.5);
  EXPECT_NEAR(fixed.r_squared, 1.0, 1e-12);
  const ScalingFit free_beta = fit_scaling(r, Quantity::peak_width, FitModel::custom(1.0));
  EXPECT_NEAR(free_beta.beta, -0.5, 1e-9);
}

TEST(FitScaling, MisfitLowersRSquared) {
  const SweepResult r = synthetic_rows([](double n) { return 1.0 + 0.3 * std::sin(n); });
  const ScalingFit fit = fit_scaling(r, Quantity::T, FitModel::custom(1.0, 0.5));
  EXPECT_GE(fit.r_squared, 0.0);
  EXPECT_LT(fit.r_squared, 0.5);
}

TEST(FitScaling, NeedsFiveSuccessfulRows) {
  SweepResult r = synthetic_rows([](double n) { return std::sqrt(n); });
  r.rows[0].error = "failed";
  r.rows[1].error = "failed";
  EXPECT_NO_THROW(fit_scaling(r, Quantity::T, FitModel::sqrt_NlogN()));
  r.rows[2].error = "failed";
  EXPECT_THROW(fit_scaling(r, Quantity::T, FitModel::sqrt_NlogN()), FitError);
  EXPECT_THROW(fit_scaling(SweepResult{}, Quantity::T, FitModel::sqrt_NlogN()), FitError);
}

TEST(FitModel, Parse) {
  EXPECT_EQ(parse_fit_model("quarter_power").kind, FitKind::quarter_power);
  EXPECT_EQ(parse_fit_model("inverse_log").kind, FitKind::inverse_log);
  const FitModel one = parse_fit_model("custom:1.5");
  EXPECT_EQ(one.kind, FitKind::custom);
  EXPECT_EQ(one.gamma, 1.5);
  EXPECT_FALSE(one.beta);
  const FitModel two = parse_fit_model("custom:-0.5,1");
  EXPECT_EQ(*two.beta, -0.5);
  EXPECT_EQ(two.gamma, 1.0);
  EXPECT_THROW(parse_fit_model("cubic"), ConfigError);
  EXPECT_THROW(parse_fit_model("custom:x"), ConfigError);
}

TEST(ParamRule, Couplings) {
  const Couplings log_rule = ParamRule::logarithmic().couplings(900);
  EXPECT_NEAR(log_rule.g, std::log(900.0) / std::numbers::pi, 1e-15);
  EXPECT_NEAR(log_rule.c, 5.518070530937814, 1e-12);
  const Couplings root = ParamRule::square_root().couplings(900);
  EXPECT_NEAR(root.g, 30.0 / std::numbers::pi, 1e-14);
  EXPECT_NEAR(root.c, 7.5, 1e-15);
}

TEST(SweepSizes, EmptyInput) {
  EXPECT_TRUE(sweep_sizes(std::vector<std::int64_t>{}, Mode::linear, ParamRule::logarithmic()).rows.empty());
}

TEST(SweepSizes, RejectsNonGridSizes) {
  EXPECT_THROW(sweep_sizes(std::vector<std::int64_t>{100, 99}, Mode::linear, ParamRule::logarithmic()), DomainError);
  EXPECT_THROW(sweep_sizes(std::vector<std::int64_t>{81}, Mode::linear, ParamRule::logarithmic()), DomainError);
}

TEST(SweepSizes, FailuresAreRecordedInRow) {
  SweepOptions opt;
  opt.dt = kMaxTimeStep;
  const SweepResult r = sweep_sizes(std::vector<std::int64_t>{16, 36}, Mode::nonlinear, ParamRule::fixed(1000.0, 0.0), opt);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.successes(), 0u);
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.error);
    EXPECT_NE(row.error->find("drift"), std::string::npos);
  }
}

TEST(SweepSizes, DeterministicAcrossWorkerCounts) {
  const std::vector<std::int64_t> sizes{100, 196, 144, 64};
  SweepOptions opt;
  opt.stop_after_peak = true;
  opt.workers = 1;
  const SweepResult serial = sweep_sizes(sizes, Mode::nonlinear, ParamRule::logarithmic(), opt);
  opt.workers = 3;
  const SweepResult parallel = sweep_sizes(sizes, Mode::nonlinear, ParamRule::logarithmic(), opt);
  expect_same_rows(serial, parallel);
  for (std::size_t i = 0; i < sizes.size(); ++i) EXPECT_EQ(serial.rows[i].N, sizes[i]);
}

TEST(SweepSizes, NonlinearFasterThanLinear) {
  const std::vector<std::int64_t> sizes{100, 196, 400};
  SweepOptions opt;
  opt.workers = 0;
  const SweepResult lin = sweep_sizes(sizes, Mode::linear, ParamRule::logarithmic(), opt);
  const SweepResult nl = sweep_sizes(sizes, Mode::nonlinear, ParamRule::logarithmic(), opt);
  ASSERT_EQ(lin.successes(), 3u);
  ASSERT_EQ(nl.successes(), 3u);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EXPECT_LT(nl.rows[i].T, lin.rows[i].T);
    EXPECT_EQ(lin.rows[i].g, 0.0);
    if (i > 0) {
      EXPECT_GT(lin.rows[i].T, lin.rows[i - 1].T);
    }
  }
}

TEST(SweepSizes, DtScalingWithCoupling) {
  SweepOptions opt;
  opt.scale_dt_with_coupling = true;
  opt.stop_after_peak = true;
  const SweepResult r = sweep_sizes(std::vector<std::int64_t>{400}, Mode::nonlinear, ParamRule::square_root(), opt);
  ASSERT_TRUE(r.rows[0].ok()) << *r.rows[0].error;
  const double factor = (20.0 / std::numbers::pi) * 5.0 * peak_imbalance(400);
  EXPECT_NEAR(r.rows[0].dt, kDefaultTimeStep / factor, 1e-15);
}

TEST(SweepCoupling, RowsFollowInputOrder) {
  const std::vector<double> cs{3.0, 0.0, 1.0};
  SweepOptions opt;
  opt.stop_after_peak = true;
  const SweepResult r = sweep_coupling(196, cs, opt);
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(r.rows[i].c, cs[i]);
    EXPECT_NEAR(r.rows[i].g, std::log(196.0) / std::numbers::pi, 1e-15);
    EXPECT_TRUE(r.rows[i].ok());
  }
  EXPECT_LT(r.rows[0].T, r.rows[2].T);
  EXPECT_LT(r.rows[2].T, r.rows[1].T);
}

}  // namespace
}  // namespace qwsearch
