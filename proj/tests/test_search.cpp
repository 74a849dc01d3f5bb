#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qwsearch/search.hpp"

namespace qwsearch {
namespace {

TimeSeries synthetic(double dt, double t_max, auto&& f) {
  TimeSeries s;
  for (int k = 0; k * dt <= t_max + 1e-12; ++k) {
    const double t = k * dt;
    s.samples.push_back({t, f(t), 0.0, 0.0, 1.0});
  }
  return s;
}

TEST(DetectFirstPeak, SineSquaredPeakOnGrid) {
  const TimeSeries s = synthetic(0.01, 10.0, [](double t) { return std::pow(std::sin(t / 2.0), 2); });
  const PeakEstimate peak = detect_first_peak(s);
  EXPECT_NEAR(peak.T, std::numbers::pi, 1e-5);
  EXPECT_NEAR(peak.p_bar, 1.0, 1e-9);
}

TEST(DetectFirstPeak, ParabolicRefinementBetweenSamples) {
  const double center = 3.337;
  const TimeSeries s =
      synthetic(0.1, 8.0, [&](double t) { return std::max(0.0, 0.5 - 0.1 * (t - center) * (t - center)); });
  const PeakEstimate peak = detect_first_peak(s);
  EXPECT_NEAR(peak.T, center, 1e-12);
  EXPECT_NEAR(peak.p_bar, 0.5, 1e-12);
}

TEST(DetectFirstPeak, IgnoresRipplesOnRisingFlank) {
  // Local maxima of the ripple appear from t ~ 0.3 on; the lobe maximum sits near 3 pi / 2.
  const TimeSeries s = synthetic(0.01, 12.0, [](double t) {
    return 0.3 * std::pow(std::sin(t / 3.0), 2) + 0.01 * std::pow(std::sin(5.0 * t), 2);
  });
  EXPECT_NEAR(detect_first_peak(s).T, 1.5 * std::numbers::pi, 0.2);
}

TEST(DetectFirstPeak, MonotoneSeriesHasNoPeak) {
  const TimeSeries s = synthetic(0.1, 5.0, [](double t) { return t / 10.0; });
  try {
    detect_first_peak(s);
    FAIL() << "expected NoPeakError";
  } catch (const NoPeakError& e) {
    EXPECT_EQ(e.series(), s);
  }
  EXPECT_THROW(detect_first_peak(TimeSeries{}), NoPeakError);
  const TimeSeries flat = synthetic(0.1, 5.0, [](double) { return 0.2; });
  EXPECT_THROW(detect_first_peak(flat), NoPeakError);
}

TEST(DetectFirstPeak, AcceptsInteriorMaximumOfUnclosedLobe) {
  const TimeSeries s = synthetic(0.01, 3.2, [](double t) { return std::pow(std::sin(t / 1.5), 2) * 0.4 + 0.05; });
  // Maximum at 1.5 pi / 2 = 2.356; the signal stays above half of it.
  EXPECT_NEAR(detect_first_peak(s).T, 0.75 * std::numbers::pi, 1e-5);
}

TEST(RunSearch, LinearN400NearAnalyticTime) {
  const GridSpec grid(20);
  const SearchOutcome out = run_search(SearchConfig::linear(grid));
  const double expected = std::numbers::pi / (2.0 * characteristic_energy(400));
  EXPECT_NEAR(out.T, expected, 0.2 * expected);
  EXPECT_GT(out.p_bar, 0.0);
  EXPECT_LE(out.p_bar, 1.0);
  EXPECT_GE(out.p_ball_at_T, out.p_bar);
}

TEST(RunSearch, InvariantUnderMarkedVertexTranslation) {
  const GridSpec grid(14);
  SearchConfig cfg = SearchConfig::linear(grid);
  const SearchOutcome centered = run_search(cfg);
  for (const auto cell : {std::array<int, 2>{0, 0}, std::array<int, 2>{2, 5}}) {
    cfg.marked = MarkedVertex{cell, {0, 0}};
    const SearchOutcome moved = run_search(cfg);
    EXPECT_NEAR(moved.T, centered.T, 1e-9);
    EXPECT_NEAR(moved.p_bar, centered.p_bar, 1e-9);
  }
}

TEST(RunSearch, SeriesStartsAtInitialState) {
  const GridSpec grid(10);
  const SearchOutcome out = run_search(SearchConfig::linear(grid));
  ASSERT_FALSE(out.series.empty());
  EXPECT_EQ(out.series[0].t, 0.0);
  EXPECT_EQ(out.series[0].p_gamma, 0.0);
  EXPECT_NEAR(out.series[0].p_ball, 4.0 / 100.0, 1e-15);
}

}  // namespace
}  // namespace qwsearch
