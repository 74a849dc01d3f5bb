#pragma once

// A complete search run: prepare |s>, evolve, locate the first peak of the
// Gamma overlap.  ball_probability lives in lattice.hpp.

#include <cstddef>
#include <string>

#include "qwsearch/dynamics.hpp"
#include "qwsearch/errors.hpp"
#include "qwsearch/lattice.hpp"

namespace qwsearch {

class NoPeakError : public std::runtime_error {
 public:
  NoPeakError(const std::string& what, TimeSeries series) : std::runtime_error(what), series_(std::move(series)) {}

  const TimeSeries& series() const noexcept { return series_; }

 private:
  TimeSeries series_;
};

struct PeakEstimate {
  double T = 0.0;
  double p_bar = 0.0;
  std::size_t index = 0;  // sample holding the discrete maximum
};

namespace detail {

/// Vertex of the parabola through three samples around a discrete maximum.
/// Falls back to the middle sample when the three points are not concave.
inline void refine_parabolic(const Sample& l, const Sample& m, const Sample& r, double& t, double& p) {
  t = m.t;
  p = m.p_gamma;
  const double h1 = m.t - l.t;
  const double h2 = r.t - m.t;
  if (!(h1 > 0.0) || !(h2 > 0.0)) return;
  const double d1 = (m.p_gamma - l.p_gamma) / h1;
  const double d2 = (r.p_gamma - m.p_gamma) / h2;
  const double curvature = (d2 - d1) / (0.5 * (h1 + h2));  // 2nd derivative
  if (!(curvature < 0.0)) return;
  // Slope at m of the interpolating parabola.
  const double slope = (d1 * h2 + d2 * h1) / (h1 + h2);
  const double offset = -slope / curvature;
  if (offset < -h1 || offset > h2) return;
  t = m.t + offset;
  p = m.p_gamma + slope * offset + 0.5 * curvature * offset * offset;
}

}  // namespace detail

/// First peak of p_gamma: the maximum of the first lobe (see LobeTracker),
/// refined by a parabola through the neighbouring samples.  A series that
/// ends before the lobe closes is accepted only if its maximum is interior.
inline PeakEstimate detect_first_peak(const TimeSeries& series) {
  if (series.empty()) throw NoPeakError("empty time series", series);
  LobeTracker lobe;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (lobe.push(i, series[i].p_gamma)) break;
  }
  const std::size_t i = lobe.argmax();
  if (!lobe.qualified()) throw NoPeakError("p_gamma never exceeds 3x its initial value", series);
  if (!lobe.closed() && i + 1 >= series.size()) {
    throw NoPeakError("p_gamma still rising at the end of the series (t = " +
                          std::to_string(series.samples.back().t) + ")",
                      series);
  }
  PeakEstimate peak{series[i].t, series[i].p_gamma, i};
  if (i > 0 && i + 1 < series.size()) {
    detail::refine_parabolic(series[i - 1], series[i], series[i + 1], peak.T, peak.p_bar);
  }
  if (peak.p_bar > 1.0) peak.p_bar = 1.0;
  return peak;
}

struct SearchOutcome {
  double T = 0.0;
  double p_bar = 0.0;
  double p_ball_at_T = 0.0;
  TimeSeries series;
  SearchConfig config;
};

inline SearchOutcome run_search(const SearchConfig& cfg) {
  cfg.validate();
  const WalkerState psi0 = initial_state(cfg.marked.internal, cfg.grid);
  TimeSeries series = evolve(psi0, cfg);
  const PeakEstimate peak = detect_first_peak(series);
  SearchOutcome out;
  out.T = peak.T;
  out.p_bar = peak.p_bar;
  out.p_ball_at_T = series[peak.index].p_ball;
  out.series = std::move(series);
  out.config = cfg;
  return out;
}

}  // namespace qwsearch
