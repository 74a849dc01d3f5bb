#pragma once

// Time integration of i d psi/dt = H_eff(psi) psi with
//
//     H_eff(psi) = (1 + g c delta(psi)) H_L + H_NL(psi),
//     delta(psi) = |<Gamma|psi>|^2 / 4 - 4 |<s|psi>|^2 / N.
//
// Classical RK4 on the continuous flow; the nonlinearity and delta are
// re-evaluated at every stage.  psi is never renormalised: norm drift is
// monitored and reported.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qwsearch/errors.hpp"
#include "qwsearch/lattice.hpp"
#include "qwsearch/reduced_model.hpp"

namespace qwsearch {

enum class Mode { linear, nonlinear };

inline std::string to_string(Mode mode) { return mode == Mode::linear ? "linear" : "nonlinear"; }

inline Mode parse_mode(const std::string& text) {
  if (text == "linear") return Mode::linear;
  if (text == "nonlinear") return Mode::nonlinear;
  throw ConfigError("unknown mode '" + text + "'");
}

inline constexpr double kDefaultTimeStep = 0.01;
inline constexpr double kMaxTimeStep = 0.05;
/// Per-step drift above which the step is rejected as an integration failure.
inline constexpr double kStepDriftLimit = 1e-6;
/// Accepted drift of the input to a single step.
inline constexpr double kRunDriftBudget = 1e-8;

/// 3 pi / (2 E(N)): three linear searching times.
inline double default_time_horizon(const GridSpec& grid) {
  return 3.0 * std::numbers::pi / (2.0 * characteristic_energy(static_cast<std::int64_t>(grid.vertices())));
}

struct SearchConfig {
  GridSpec grid{4};
  MarkedVertex marked{};
  Mode mode = Mode::linear;
  double g = 0.0;
  double c = 0.0;
  double dt = kDefaultTimeStep;
  double t_max = 1.0;
  int sample_stride = 1;
  /// End the evolution once the first Gamma-overlap lobe has closed.
  bool stop_after_peak = false;

  static SearchConfig linear(const GridSpec& grid) {
    SearchConfig cfg;
    cfg.grid = grid;
    cfg.marked = MarkedVertex::centered(grid);
    cfg.t_max = default_time_horizon(grid);
    return cfg;
  }

  static SearchConfig nonlinear(const GridSpec& grid, double g, double c) {
    SearchConfig cfg = linear(grid);
    cfg.mode = Mode::nonlinear;
    cfg.g = g;
    cfg.c = c;
    return cfg;
  }

  /// Linear mode switches both couplings off.
  double effective_g() const noexcept { return mode == Mode::linear ? 0.0 : g; }
  double effective_c() const noexcept { return mode == Mode::linear ? 0.0 : c; }

  void validate() const {
    if (!(g >= 0.0) || !(c >= 0.0)) throw ConfigError("couplings g and c must be non-negative");
    if (!(dt > 0.0) || dt > kMaxTimeStep) {
      throw ConfigError("dt must lie in (0, " + std::to_string(kMaxTimeStep) + "], got " + std::to_string(dt));
    }
    if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
    if (sample_stride < 1) throw ConfigError("sample_stride must be at least 1");
    (void)marked.vertex(grid);
  }
};

struct SubspaceAmplitudes {
  Complex a{0.0, 0.0};  // <Gamma|psi>
  Complex b{0.0, 0.0};  // <s|psi>
  double delta = 0.0;
};

inline double imbalance(Complex a, Complex b, std::size_t n_vertices) {
  return std::norm(a) / 4.0 - 4.0 * std::norm(b) / static_cast<double>(n_vertices);
}

inline SubspaceAmplitudes subspace_amplitudes(std::span<const Complex> psi, const WalkerState& gamma,
                                              const WalkerState& s, const GridSpec& grid) {
  detail::check_size(psi, grid);
  SubspaceAmplitudes out;
  out.a = inner(gamma.amplitudes(), psi);
  out.b = inner(s.amplitudes(), psi);
  out.delta = imbalance(out.a, out.b, grid.vertices());
  return out;
}

inline SubspaceAmplitudes subspace_amplitudes(const WalkerState& psi, const WalkerState& gamma, const WalkerState& s) {
  return subspace_amplitudes(psi.amplitudes(), gamma, s, psi.grid());
}

struct Sample {
  double t = 0.0;
  double p_gamma = 0.0;
  double p_ball = 0.0;
  double delta = 0.0;
  double norm_sq = 1.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct TimeSeries {
  std::vector<Sample> samples;

  bool empty() const noexcept { return samples.empty(); }
  std::size_t size() const noexcept { return samples.size(); }
  const Sample& operator[](std::size_t i) const noexcept { return samples[i]; }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

/// Stateful integrator for one SearchConfig: owns Gamma, s and the RK4
/// workspace so repeated steps do not allocate.
class Propagator {
 public:
  explicit Propagator(const SearchConfig& cfg)
      : cfg_(cfg),
        gamma_(target_state(cfg.marked, cfg.grid)),
        s_(initial_state(cfg.marked.internal, cfg.grid)),
        g_(cfg.effective_g()),
        gc_(cfg.effective_g() * cfg.effective_c()) {
    cfg_.validate();
    const std::size_t n = cfg_.grid.vertices();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &stage_}) v->assign(n, Complex{0.0, 0.0});
  }

  const SearchConfig& config() const noexcept { return cfg_; }
  const WalkerState& gamma() const noexcept { return gamma_; }
  const WalkerState& s() const noexcept { return s_; }

  SubspaceAmplitudes project(std::span<const Complex> psi) const {
    return subspace_amplitudes(psi, gamma_, s_, cfg_.grid);
  }

  /// out = H_eff(psi) psi.
  void apply_effective(std::span<const Complex> psi, std::span<Complex> out) {
    const double scale = gc_ == 0.0 ? 1.0 : 1.0 + gc_ * project(psi).delta;
    apply_search_hamiltonian(psi, out, cfg_.marked, cfg_.grid);
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = scale * out[i] - g_ * std::norm(psi[i]) * psi[i];
  }

  /// Advances psi by dt in place.  Returns |norm^2(after) - norm^2(before)|.
  double advance(std::span<Complex> psi) {
    const std::size_t n = psi.size();
    const double dt = cfg_.dt;
    const double before = norm_squared(psi);
    derivative(psi, k1_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = psi[i] + 0.5 * dt * k1_[i];
    derivative(stage_, k2_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = psi[i] + 0.5 * dt * k2_[i];
    derivative(stage_, k3_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = psi[i] + dt * k3_[i];
    derivative(stage_, k4_);
    for (std::size_t i = 0; i < n; ++i) psi[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    return std::abs(norm_squared(psi) - before);
  }

 private:
  // k = -i H_eff(y) y
  void derivative(std::span<const Complex> y, std::span<Complex> k) {
    apply_effective(y, k);
    for (auto& z : k) z = Complex{z.imag(), -z.real()};
  }

  SearchConfig cfg_;
  WalkerState gamma_;
  WalkerState s_;
  double g_;
  double gc_;
  Amplitudes k1_, k2_, k3_, k4_, stage_;
};

/// (1 + g c delta(psi)) (H0 + H_oracle) psi + H_NL psi.
inline Amplitudes effective_apply(std::span<const Complex> psi, const SearchConfig& cfg, const WalkerState& gamma,
                                  const WalkerState& s) {
  detail::check_size(psi, cfg.grid);
  const double g = cfg.effective_g();
  const double gc = g * cfg.effective_c();
  const double scale = gc == 0.0 ? 1.0 : 1.0 + gc * subspace_amplitudes(psi, gamma, s, cfg.grid).delta;
  Amplitudes out = apply_search_hamiltonian(psi, cfg.marked, cfg.grid);
  for (std::size_t i = 0; i < psi.size(); ++i) out[i] = scale * out[i] - g * std::norm(psi[i]) * psi[i];
  return out;
}

/// One RK4 step of length cfg.dt.  Gamma and s are taken from cfg.marked;
/// the arguments are kept for symmetry with effective_apply and checked for
/// consistency.
inline WalkerState step(const WalkerState& psi, const SearchConfig& cfg, const WalkerState& gamma,
                        const WalkerState& s) {
  if (!(psi.grid() == cfg.grid)) throw DomainError("state and config live on different grids");
  const double before = psi.norm_squared();
  if (std::abs(before - 1.0) > kRunDriftBudget) throw DomainError("step input is not normalised within 1e-8");
  Propagator prop(cfg);
  if (std::abs(inner(prop.gamma().amplitudes(), gamma.amplitudes()).real() - 1.0) > 1e-12 ||
      std::abs(inner(prop.s().amplitudes(), s.amplitudes()).real() - 1.0) > 1e-12) {
    throw DomainError("Gamma/s do not belong to the configured marked vertex");
  }
  Amplitudes next(psi.amplitudes().begin(), psi.amplitudes().end());
  const double drift = prop.advance(next);
  if (drift > kStepDriftLimit) throw IntegrationError("norm drift above 1e-6 in one step; reduce dt", 0.0);
  return WalkerState(cfg.grid, std::move(next), 1.0);
}

/// Tracks the first lobe of a non-negative signal sampled in time order: the
/// lobe qualifies once its running maximum exceeds 3x the initial value, and
/// closes at the first later sample below half of that maximum.
class LobeTracker {
 public:
  /// Feeds sample i with value p.  Returns true once the lobe has closed.
  bool push(std::size_t i, double p) {
    if (closed_) return true;
    if (!started_) {
      started_ = true;
      initial_ = p;
    }
    if (!has_max_ || p > max_) {
      has_max_ = true;
      max_ = p;
      argmax_ = i;
    } else if (qualified() && p < 0.5 * max_) {
      closed_ = true;
    }
    return closed_;
  }

  bool qualified() const noexcept { return has_max_ && max_ > 3.0 * initial_ && max_ > 0.0; }
  bool closed() const noexcept { return closed_; }
  std::size_t argmax() const noexcept { return argmax_; }
  double max() const noexcept { return max_; }

 private:
  bool started_ = false;
  bool has_max_ = false;
  bool closed_ = false;
  double initial_ = 0.0;
  double max_ = 0.0;
  std::size_t argmax_ = 0;
};

/// Called with (t, psi) at every recorded sample.
using StateObserver = std::function<void(double, std::span<const Complex>)>;

/// Integrates from psi0 up to cfg.t_max, recording t = 0 and every
/// sample_stride-th step.
inline TimeSeries evolve(const WalkerState& psi0, const SearchConfig& cfg, const StateObserver& observer = {}) {
  cfg.validate();
  if (!(psi0.grid() == cfg.grid)) throw DomainError("initial state and config live on different grids");
  if (std::abs(psi0.norm_squared() - 1.0) > kNormTolerance) throw DomainError("initial state is not normalised");

  Propagator prop(cfg);
  Amplitudes psi(psi0.amplitudes().begin(), psi0.amplitudes().end());
  TimeSeries series;
  LobeTracker lobe;

  auto record = [&](double t) {
    const SubspaceAmplitudes sub = prop.project(psi);
    Sample smp{t, std::norm(sub.a), ball_probability(psi, cfg.marked, cfg.grid), sub.delta, norm_squared(psi)};
    if (std::abs(smp.norm_sq - 1.0) > kRunDriftBudget) {
      throw IntegrationError("accumulated norm drift above 1e-8", t);
    }
    series.samples.push_back(smp);
    if (observer) observer(t, psi);
    return lobe.push(series.size() - 1, smp.p_gamma);
  };

  const auto steps = static_cast<std::int64_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  series.samples.reserve(static_cast<std::size_t>(steps / cfg.sample_stride) + 2);
  record(0.0);
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * cfg.dt;
    if (prop.advance(psi) > kStepDriftLimit) throw IntegrationError("norm drift above 1e-6 in one step", t0);
    if ((k + 1) % cfg.sample_stride == 0) {
      const bool closed = record(static_cast<double>(k + 1) * cfg.dt);
      if (closed && cfg.stop_after_peak) break;
    }
  }
  return series;
}

}  // namespace qwsearch
