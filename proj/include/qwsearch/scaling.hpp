#pragma once

// Experiment orchestration: size and coupling sweeps, power-law fits of the
// searching time and success probability, and the width of the first peak.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qwsearch/ansatz.hpp"
#include "qwsearch/dynamics.hpp"
#include "qwsearch/errors.hpp"
#include "qwsearch/reduced_model.hpp"
#include "qwsearch/search.hpp"

namespace qwsearch {

/// Full width at half maximum of the first p_gamma peak, with linear
/// interpolation of both half-maximum crossings.
inline double peak_width(const TimeSeries& series) {
  const PeakEstimate peak = detect_first_peak(series);
  const double half = 0.5 * peak.p_bar;
  const auto& s = series.samples;

  std::optional<double> left;
  for (std::size_t i = peak.index; i > 0; --i) {
    if (s[i - 1].p_gamma <= half) {
      const Sample& a = s[i - 1];
      const Sample& b = s[i];
      left = a.t + (half - a.p_gamma) / (b.p_gamma - a.p_gamma) * (b.t - a.t);
      break;
    }
  }
  std::optional<double> right;
  for (std::size_t i = peak.index; i + 1 < s.size(); ++i) {
    if (s[i + 1].p_gamma <= half) {
      const Sample& a = s[i];
      const Sample& b = s[i + 1];
      right = a.t + (a.p_gamma - half) / (a.p_gamma - b.p_gamma) * (b.t - a.t);
      break;
    }
  }
  if (!left || !right) throw WidthError("half-maximum crossings of the first peak are not bracketed");
  return *right - *left;
}

struct Couplings {
  double g = 0.0;
  double c = 0.0;
};

/// Maps a vertex count onto (g, c).
struct ParamRule {
  std::string name;
  std::function<Couplings(std::int64_t)> couplings;

  /// g = ln N / pi, c = 1/(2E) (or 1/E).
  static ParamRule logarithmic(RescalingChoice choice = RescalingChoice::half_inverse_energy) {
    return {choice == RescalingChoice::inverse_energy ? "log-inverse-E" : "log-half-inverse-E",
            [choice](std::int64_t n) { return Couplings{default_nonlinear_coupling(n), default_rescaling(n, choice)}; }};
  }

  /// g = sqrt(N) / pi, c = sqrt(N) / 4.
  static ParamRule square_root() {
    return {"sqrt-N", [](std::int64_t n) {
              const double r = std::sqrt(static_cast<double>(n));
              return Couplings{r / std::numbers::pi, r / 4.0};
            }};
  }

  static ParamRule fixed(double g, double c) {
    return {"fixed", [g, c](std::int64_t) { return Couplings{g, c}; }};
  }
};

struct SweepRow {
  std::int64_t N = 0;
  int L = 0;
  Mode mode = Mode::linear;
  double g = 0.0;
  double c = 0.0;
  double dt = 0.0;
  double T = 0.0;
  double p_bar = 0.0;
  double p_ball_at_T = 0.0;
  double peak_width = 0.0;
  /// Set when the run failed; the numeric fields are then meaningless.
  std::optional<std::string> error;
  /// Filled only when SweepOptions::keep_series is set.
  std::optional<TimeSeries> series;

  bool ok() const noexcept { return !error.has_value(); }
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::size_t successes() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); }));
  }
};

struct SweepOptions {
  double dt = kDefaultTimeStep;
  /// Divides dt by max(1, c g peak_imbalance(N)), the rescaling of H_L at
  /// the overlap peak.
  bool scale_dt_with_coupling = false;
  int sample_stride = 1;
  bool stop_after_peak = false;
  bool keep_series = false;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 1;
};

namespace detail {

/// Runs jobs[i] for every i on a bounded pool; results are stored by index.
template <class Job>
void run_indexed(std::size_t count, unsigned workers, Job&& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
}

inline SweepRow run_row(std::int64_t n, Mode mode, Couplings k, const SweepOptions& opt) {
  SweepRow row;
  row.N = n;
  row.mode = mode;
  try {
    const GridSpec grid = GridSpec::from_vertex_count(n);
    row.L = grid.side();
    SearchConfig cfg = mode == Mode::linear ? SearchConfig::linear(grid) : SearchConfig::nonlinear(grid, k.g, k.c);
    row.g = cfg.effective_g();
    row.c = cfg.effective_c();
    cfg.dt = opt.dt;
    if (opt.scale_dt_with_coupling) {
      cfg.dt = opt.dt / std::max(1.0, row.g * row.c * peak_imbalance(n));
    }
    cfg.sample_stride = opt.sample_stride;
    cfg.stop_after_peak = opt.stop_after_peak;
    row.dt = cfg.dt;
    const SearchOutcome out = run_search(cfg);
    row.T = out.T;
    row.p_bar = out.p_bar;
    row.p_ball_at_T = out.p_ball_at_T;
    row.peak_width = peak_width(out.series);
    if (opt.keep_series) row.series = out.series;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace detail

/// One run_search per N, couplings from the rule; rows in input order.
inline SweepResult sweep_sizes(std::span<const std::int64_t> sizes, Mode mode, const ParamRule& rule,
                               const SweepOptions& options = {}) {
  for (const auto n : sizes) {
    (void)GridSpec::from_vertex_count(n);
    detail::check_vertex_count(n);
  }
  SweepResult result;
  result.rows.resize(sizes.size());
  detail::run_indexed(sizes.size(), options.workers, [&](std::size_t i) {
    const Couplings k = mode == Mode::linear ? Couplings{} : rule.couplings(sizes[i]);
    result.rows[i] = detail::run_row(sizes[i], mode, k, options);
  });
  return result;
}

/// Nonlinear runs at fixed N with g = ln N / pi and c taken from c_values.
inline SweepResult sweep_coupling(std::int64_t n_vertices, std::span<const double> c_values,
                                  const SweepOptions& options = {}) {
  (void)GridSpec::from_vertex_count(n_vertices);
  const double g = default_nonlinear_coupling(n_vertices);
  SweepResult result;
  result.rows.resize(c_values.size());
  detail::run_indexed(c_values.size(), options.workers, [&](std::size_t i) {
    result.rows[i] = detail::run_row(n_vertices, Mode::nonlinear, Couplings{g, c_values[i]}, options);
  });
  return result;
}

enum class FitKind {
  sqrt_NlogN,     // T = A N^beta (ln N)^(1/2)
  quarter_power,  // T = A N^beta (ln N)^(3/4)
  inverse_log,    // p_bar = A / ln N through the origin
  custom,         // A N^beta (ln N)^gamma, gamma fixed, beta fixed or fitted
};

struct FitModel {
  FitKind kind = FitKind::sqrt_NlogN;
  double gamma = 0.5;
  std::optional<double> beta;  // custom only: fixed power of N

  static FitModel sqrt_NlogN() { return {FitKind::sqrt_NlogN, 0.5, std::nullopt}; }
  static FitModel quarter_power() { return {FitKind::quarter_power, 0.75, std::nullopt}; }
  static FitModel inverse_log() { return {FitKind::inverse_log, -1.0, 0.0}; }
  static FitModel custom(double gamma, std::optional<double> beta = std::nullopt) {
    return {FitKind::custom, gamma, beta};
  }
};

inline std::string to_string(FitKind kind) {
  switch (kind) {
    case FitKind::sqrt_NlogN: return "sqrt_NlogN";
    case FitKind::quarter_power: return "quarter_power";
    case FitKind::inverse_log: return "inverse_log";
    case FitKind::custom: return "custom";
  }
  return "unknown";
}

inline FitModel parse_fit_model(const std::string& text) {
  if (text == "sqrt_NlogN") return FitModel::sqrt_NlogN();
  if (text == "quarter_power") return FitModel::quarter_power();
  if (text == "inverse_log") return FitModel::inverse_log();
  // custom:<gamma> or custom:<beta>,<gamma>
  if (text.rfind("custom:", 0) == 0) {
    const std::string args = text.substr(7);
    const auto comma = args.find(',');
    try {
      if (comma == std::string::npos) return FitModel::custom(std::stod(args));
      return FitModel::custom(std::stod(args.substr(comma + 1)), std::stod(args.substr(0, comma)));
    } catch (const std::exception&) {
      // fall through to the error below
    }
  }
  throw ConfigError("unknown fit model '" + text + "'");
}

enum class Quantity { T, p_bar, peak_width };

inline std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::T: return "T";
    case Quantity::p_bar: return "p_bar";
    case Quantity::peak_width: return "peak_width";
  }
  return "unknown";
}

struct ScalingFit {
  FitModel model;
  double prefactor = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double r_squared = 0.0;
  std::size_t rows_used = 0;
};

inline constexpr std::size_t kMinFitRows = 5;

/// Least squares on transformed coordinates.  Power-law models fit
/// y = log(q / (ln N)^gamma) against x = log N (slope beta, intercept
/// log prefactor); inverse_log fits q against 1/ln N through the origin.
/// r_squared is measured in the fitted coordinates and clamped to [0, 1].
inline ScalingFit fit_scaling(const SweepResult& result, Quantity quantity, const FitModel& model) {
  std::vector<double> n_values, q_values;
  for (const auto& row : result.rows) {
    if (!row.ok()) continue;
    const double q = quantity == Quantity::T ? row.T : quantity == Quantity::p_bar ? row.p_bar : row.peak_width;
    n_values.push_back(static_cast<double>(row.N));
    q_values.push_back(q);
  }
  if (n_values.size() < kMinFitRows) {
    throw FitError("fit needs at least " + std::to_string(kMinFitRows) + " successful rows, got " +
                   std::to_string(n_values.size()));
  }
  const std::size_t m = n_values.size();
  ScalingFit fit;
  fit.model = model;
  fit.rows_used = m;
  fit.gamma = model.gamma;

  auto r2 = [](std::span<const double> y, std::span<const double> yhat) {
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
      ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  };

  if (model.kind == FitKind::inverse_log) {
    double su = 0.0, suu = 0.0;
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i) {
      u[i] = 1.0 / std::log(n_values[i]);
      su += u[i] * q_values[i];
      suu += u[i] * u[i];
    }
    fit.prefactor = su / suu;
    fit.beta = 0.0;
    std::vector<double> yhat(m);
    for (std::size_t i = 0; i < m; ++i) yhat[i] = fit.prefactor * u[i];
    fit.r_squared = r2(q_values, yhat);
    return fit;
  }

  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(q_values[i] > 0.0)) throw FitError("power-law fit needs positive values");
    x[i] = std::log(n_values[i]);
    y[i] = std::log(q_values[i] / std::pow(std::log(n_values[i]), model.gamma));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double slope = 0.0;
  if (model.kind == FitKind::custom && model.beta) {
    slope = *model.beta;
  } else {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw FitError("fit needs at least two distinct N");
    slope = sxy / sxx;
  }
  const double intercept = my - slope * mx;
  std::vector<double> yhat(m);
  for (std::size_t i = 0; i < m; ++i) yhat[i] = intercept + slope * x[i];
  fit.beta = slope;
  fit.prefactor = std::exp(intercept);
  fit.r_squared = r2(y, yhat);
  return fit;
}

}  // namespace qwsearch
