#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qwsearch/io.hpp"
#include "qwsearch/qwsearch.hpp"

namespace qwsearch::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using io::Curve;
using io::svg_plot;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters that are well-formed but outside the region where the
/// algorithm is defined.
class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

double parse_real(const std::string& flag, const std::string& text) {
  try {
    return io::parse_double(text);
  } catch (const std::exception&) {
    throw UsageError(flag + ": expected a real number, got '" + text + "'");
  }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    io::write_file(p, content);
    files_.push_back(p.string());
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  bool empty() const noexcept { return files_.empty(); }

  void write_manifest(const std::vector<std::string>& args, const json& config, double wall_time) {
    std::vector<std::string> listed = files_;
    listed.push_back((dir_ / "manifest.json").string());
    const json manifest = {{"command", "qwsearch " + join(args, " ")},
                           {"config", config},
                           {"version", kVersion},
                           {"wall_time_s", wall_time},
                           {"outputs", listed}};
    io::write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// Flag groups and their resolution.

struct PhysicsFlags {
  int L = 30;
  std::string mode = "linear";
  std::string g = "auto";
  std::string c = "auto";
  double dt = kDefaultTimeStep;
  std::string t_max = "auto";
  std::string marked = "auto";
};

void add_physics(CLI::App& app, PhysicsFlags& f, bool with_marked) {
  app.add_option("--L", f.L, "even grid side")->capture_default_str();
  app.add_option("--mode", f.mode, "linear | nonlinear")
      ->check(CLI::IsMember({"linear", "nonlinear"}))
      ->capture_default_str();
  app.add_option("--g", f.g, "nonlinear coupling: real | auto (ln N / pi)")->capture_default_str();
  app.add_option("--c", f.c, "rescaling: real | auto | cmode:half-inverse-E | cmode:inverse-E")->capture_default_str();
  app.add_option("--dt", f.dt, "RK4 step")->capture_default_str();
  app.add_option("--t-max", f.t_max, "time horizon: real | auto")->capture_default_str();
  if (with_marked) app.add_option("--marked", f.marked, "wx,wy,ax,ay | auto")->capture_default_str();
}

double resolve_g(std::int64_t n, const std::string& text) {
  if (text == "auto") return default_nonlinear_coupling(n);
  const double g = parse_real("--g", text);
  if (!(g >= 0.0)) throw UsageError("--g must be non-negative");
  return g;
}

double resolve_c(std::int64_t n, const std::string& text) {
  if (text == "auto" || text == "cmode:half-inverse-E" || text == "half-inverse-E") return default_rescaling(n);
  if (text == "cmode:inverse-E" || text == "inverse-E") return default_rescaling(n, RescalingChoice::inverse_energy);
  const double c = parse_real("--c", text);
  if (!(c >= 0.0)) throw UsageError("--c must be non-negative");
  return c;
}

/// c must keep the rescaling 1 + c g delta positive at t = 0, i.e. c < N/(4g).
/// An automatic c additionally needs c_min < c_max.
void check_feasible(std::int64_t n, double g, double c, bool automatic_c, std::ostream& err) {
  if (g == 0.0) return;
  const double n_d = static_cast<double>(n);
  const double c_max = n_d / (4.0 * g);
  if (automatic_c) (void)c_bounds(n, g);
  if (!(c < c_max)) {
    throw PhysicsError("c = " + io::format_double(c) + " violates the bound c < c_max = N/(4g) = " +
                       io::format_double(c_max));
  }
  const double c_min = default_rescaling(n);
  if (c > 0.0 && c < c_min) {
    err << "note: c = " << c << " is below c_min = 1/(2E) = " << c_min << "\n";
  }
}

MarkedVertex resolve_marked(const GridSpec& grid, const std::string& text) {
  if (text == "auto") return MarkedVertex::centered(grid);
  std::vector<int> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    try {
      std::size_t used = 0;
      const std::string part = text.substr(start, end - start);
      v.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--marked expects wx,wy,ax,ay or auto, got '" + text + "'");
    }
    start = end + 1;
  }
  if (v.size() != 4) throw UsageError("--marked expects four integers wx,wy,ax,ay");
  MarkedVertex m{{v[0], v[1]}, {v[2], v[3]}};
  (void)m.vertex(grid);
  return m;
}

struct ResolvedRun {
  SearchConfig cfg;
  bool automatic_c = false;
};

ResolvedRun resolve_search(const PhysicsFlags& f) {
  return as_usage([&] {
    const GridSpec grid(f.L);
    const auto n = static_cast<std::int64_t>(grid.vertices());
    ResolvedRun r;
    const Mode mode = parse_mode(f.mode);
    r.cfg = mode == Mode::linear ? SearchConfig::linear(grid)
                                 : SearchConfig::nonlinear(grid, resolve_g(n, f.g), resolve_c(n, f.c));
    r.automatic_c = f.c == "auto" || f.c.rfind("cmode:", 0) == 0 || f.c.find("inverse-E") != std::string::npos;
    r.cfg.marked = resolve_marked(grid, f.marked);
    r.cfg.dt = f.dt;
    if (f.t_max != "auto") r.cfg.t_max = parse_real("--t-max", f.t_max);
    r.cfg.validate();
    return r;
  });
}

json config_json(const SearchConfig& cfg) {
  const auto v = cfg.marked;
  return {{"L", cfg.grid.side()},
          {"N", cfg.grid.vertices()},
          {"mode", to_string(cfg.mode)},
          {"g", cfg.effective_g()},
          {"c", cfg.effective_c()},
          {"dt", cfg.dt},
          {"t_max", cfg.t_max},
          {"marked", {v.cell[0], v.cell[1], v.internal[0], v.internal[1]}},
          {"sample_stride", cfg.sample_stride}};
}

std::vector<std::int64_t> sizes_from_sides(const std::vector<int>& sides) {
  return as_usage([&] {
    std::vector<std::int64_t> out;
    for (const int L : sides) out.push_back(static_cast<std::int64_t>(GridSpec(L).vertices()));
    return out;
  });
}

ParamRule resolve_rule(const std::string& name) {
  if (name == "log" || name == "log-half-inverse-E") return ParamRule::logarithmic();
  if (name == "log-inverse-E") return ParamRule::logarithmic(RescalingChoice::inverse_energy);
  if (name == "sqrt-N") return ParamRule::square_root();
  throw UsageError("unknown --rule '" + name + "'");
}

json sweep_options_json(const SweepOptions& o) {
  return {{"dt", o.dt},
          {"scale_dt_with_coupling", o.scale_dt_with_coupling},
          {"sample_stride", o.sample_stride},
          {"stop_after_peak", o.stop_after_peak},
          {"workers", o.workers}};
}

/// Number of failed rows, each reported on err.
std::size_t report_failures(const SweepResult& r, std::ostream& err) {
  std::size_t failed = 0;
  for (const auto& row : r.rows) {
    if (row.ok()) continue;
    ++failed;
    err << "run N=" << row.N << " c=" << row.c << " failed: " << *row.error << "\n";
  }
  return failed;
}

Curve log_log_curve(const SweepResult& r, std::function<double(const SweepRow&)> q, const std::string& label) {
  Curve c;
  c.label = label;
  for (const auto& row : r.rows) {
    if (!row.ok()) continue;
    c.x.push_back(std::log(static_cast<double>(row.N)));
    c.y.push_back(std::log(q(row)));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Subcommands.  Each returns an exit code and fills `config` with the
// resolved parameter set for the manifest.

struct Context {
  std::ostream& out;
  std::ostream& err;
  json config;
};

struct SearchCmd {
  PhysicsFlags physics;
  std::string out_dir = "out/search";
  std::string format = "both";
  bool svg = false;
  int stride = 1;

  void add(CLI::App& app) {
    add_physics(app, physics, true);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--format", format, "csv | json | both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    app.add_flag("--svg", svg, "also write series.svg");
    app.add_option("--stride", stride, "record every k-th step")->capture_default_str();
  }

  int run(Context& ctx, Outputs& outputs) {
    ResolvedRun r = resolve_search(physics);
    r.cfg.sample_stride = stride;
    as_usage([&] { r.cfg.validate(); return 0; });
    ctx.config = config_json(r.cfg);
    ctx.config["format"] = format;
    ctx.config["svg"] = svg;
    ctx.config["out"] = out_dir;
    const auto n = static_cast<std::int64_t>(r.cfg.grid.vertices());
    if (r.cfg.mode == Mode::nonlinear) check_feasible(n, r.cfg.g, r.cfg.c, r.automatic_c, ctx.err);

    const SearchOutcome outcome = run_search(r.cfg);
    json result = io::result_json(outcome, 0.0);
    try {
      result["peak_width"] = peak_width(outcome.series);
    } catch (const WidthError& e) {
      result["peak_width"] = nullptr;
      ctx.err << "note: " << e.what() << "; extend --t-max\n";
    }
    if (format != "json") outputs.write("series.csv", io::series_csv(outcome.series));
    if (format != "csv") outputs.write_json("series.json", io::series_json(outcome.series));
    if (svg) outputs.write("series.svg", io::series_svg(outcome.series));
    outputs.write_json("result.json", result);
    ctx.out << result.dump(2) << "\n";
    return kExitOk;
  }
};

struct SweepCmd {
  std::vector<int> sides{10, 14, 20, 28, 40, 56, 64};
  std::string mode = "linear";
  std::string rule = "log";
  std::string fit = "auto";
  unsigned workers = 0;
  double dt = kDefaultTimeStep;
  int stride = 1;
  bool scale_dt = false;
  std::string out_dir = "out/sweep";
  bool svg = false;

  void add(CLI::App& app) {
    app.add_option("--L-list", sides, "comma-separated even grid sides")->delimiter(',')->capture_default_str();
    app.add_option("--mode", mode, "linear | nonlinear")
        ->check(CLI::IsMember({"linear", "nonlinear"}))
        ->capture_default_str();
    app.add_option("--rule", rule, "coupling rule: log | log-inverse-E | sqrt-N")->capture_default_str();
    app.add_option("--fit", fit, "sqrt_NlogN | quarter_power | custom:<gamma> | custom:<beta>,<gamma> | auto")
        ->capture_default_str();
    app.add_option("--workers", workers, "parallel runs (0: available parallelism)")->capture_default_str();
    app.add_option("--dt", dt, "RK4 step")->capture_default_str();
    app.add_option("--stride", stride, "record every k-th step")->capture_default_str();
    app.add_flag("--scale-dt", scale_dt, "divide dt by the peak rescaling factor");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--svg", svg, "also write sweep.svg (log T vs log N)");
  }

  int run(Context& ctx, Outputs& outputs) {
    const auto sizes = sizes_from_sides(sides);
    const Mode m = as_usage([&] { return parse_mode(mode); });
    const ParamRule param_rule = resolve_rule(rule);
    const std::string fit_name = fit != "auto" ? fit : m == Mode::linear ? "sqrt_NlogN" : "quarter_power";
    const FitModel model = as_usage([&] { return parse_fit_model(fit_name); });
    SweepOptions opt;
    opt.dt = dt;
    opt.sample_stride = stride;
    opt.scale_dt_with_coupling = scale_dt;
    opt.stop_after_peak = true;
    opt.workers = workers;
    ctx.config = {{"L_list", sides}, {"mode", mode}, {"rule", param_rule.name}, {"fit", fit_name},
                  {"options", sweep_options_json(opt)}, {"out", out_dir}, {"svg", svg}};
    if (m == Mode::nonlinear) {
      for (const auto n : sizes) {
        const auto k = param_rule.couplings(n);
        check_feasible(n, k.g, k.c, param_rule.name != "fixed", ctx.err);
      }
    }

    const SweepResult result = sweep_sizes(sizes, m, param_rule, opt);
    outputs.write("sweep.csv", io::sweep_csv(result));
    outputs.write_json("sweep.json", io::sweep_json(result));
    if (svg) outputs.write("sweep.svg", svg_plot({log_log_curve(result, [](const SweepRow& r) { return r.T; }, "T")},
                                                 "ln N", "ln T"));
    const std::size_t failed = report_failures(result, ctx.err);
    const std::size_t usable = result.successes();
    if (usable < kMinFitRows) {
      ctx.err << "fit skipped: " << usable << " successful rows, need " << kMinFitRows << "\n";
      return failed ? kExitFailure : kExitOk;
    }
    const json t_fit = io::fit_json(fit_scaling(result, Quantity::T, model));
    outputs.write_json("fit.json", t_fit);
    outputs.write_json("fit_p_bar.json", io::fit_json(fit_scaling(result, Quantity::p_bar, FitModel::inverse_log())));
    ctx.out << t_fit.dump(2) << "\n";
    return failed ? kExitFailure : kExitOk;
  }
};

struct SweepCCmd {
  int L = 30;
  std::vector<double> c_values{0.0, 2.0, 5.52, 11.0, 20.0};
  unsigned workers = 0;
  double dt = kDefaultTimeStep;
  int stride = 1;
  std::string out_dir = "out/sweep-c";
  bool svg = false;
  bool series = false;

  void add(CLI::App& app) {
    app.add_option("--L", L, "even grid side")->capture_default_str();
    app.add_option("--c-list", c_values, "comma-separated rescaling strengths")->delimiter(',')->capture_default_str();
    app.add_option("--workers", workers, "parallel runs (0: available parallelism)")->capture_default_str();
    app.add_option("--dt", dt, "RK4 step")->capture_default_str();
    app.add_option("--stride", stride, "record every k-th step")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--svg", svg, "overlay of p_gamma(t) for every c");
    app.add_flag("--series", series, "write one series CSV per c");
  }

  int run(Context& ctx, Outputs& outputs) {
    const std::int64_t n = sizes_from_sides({L}).front();
    const double g = default_nonlinear_coupling(n);
    for (const double c : c_values) {
      if (!(c >= 0.0)) throw UsageError("--c-list values must be non-negative");
      check_feasible(n, g, c, false, ctx.err);
    }
    SweepOptions opt;
    opt.dt = dt;
    opt.sample_stride = stride;
    opt.stop_after_peak = true;
    opt.workers = workers;
    opt.keep_series = svg || series;
    ctx.config = {{"L", L}, {"N", n}, {"g", g}, {"c_list", c_values}, {"options", sweep_options_json(opt)},
                  {"out", out_dir}, {"svg", svg}, {"series", series}};

    const SweepResult result = sweep_coupling(n, c_values, opt);
    outputs.write("sweep_c.csv", io::sweep_csv(result));
    outputs.write_json("sweep_c.json", io::sweep_json(result));
    std::vector<Curve> curves;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const auto& row = result.rows[i];
      if (!row.series) continue;
      if (series) outputs.write("series_c" + std::to_string(i) + ".csv", io::series_csv(*row.series));
      Curve curve;
      curve.label = "c = " + io::format_double(row.c);
      for (const auto& s : row.series->samples) {
        curve.x.push_back(s.t);
        curve.y.push_back(s.p_gamma);
      }
      curves.push_back(std::move(curve));
    }
    if (svg) outputs.write("sweep_c.svg", svg_plot(curves, "t", "p_gamma"));
    ctx.out << io::sweep_json(result).dump(2) << "\n";
    return report_failures(result, ctx.err) ? kExitFailure : kExitOk;
  }
};

struct ReducedCmd {
  PhysicsFlags physics;
  std::string out_dir = "out/reduced";
  bool svg = false;

  ReducedCmd() { physics.mode = "nonlinear"; }

  void add(CLI::App& app) {
    add_physics(app, physics, false);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--svg", svg, "also write reduced.svg");
  }

  int run(Context& ctx, Outputs& outputs) {
    const ResolvedRun r = resolve_search(physics);
    const SearchConfig& cfg = r.cfg;
    const auto n = static_cast<std::int64_t>(cfg.grid.vertices());
    ctx.config = config_json(cfg);
    ctx.config.erase("marked");
    ctx.config.erase("sample_stride");
    ctx.config["out"] = out_dir;
    ctx.config["svg"] = svg;
    if (cfg.mode == Mode::nonlinear) check_feasible(n, cfg.g, cfg.c, r.automatic_c, ctx.err);

    const ReducedSeries series = evolve_reduced({}, n, cfg.effective_g(), cfg.effective_c(), cfg.dt, cfg.t_max);
    TimeSeries as_series;
    for (const auto& s : series) as_series.samples.push_back({s.t, s.p_gamma, 0.0, s.delta, s.norm_sq});
    json result = {{"N", n}, {"L", cfg.grid.side()}, {"mode", to_string(cfg.mode)}, {"g", cfg.effective_g()},
                   {"c", cfg.effective_c()}, {"dt", cfg.dt}};
    try {
      const PeakEstimate peak = detect_first_peak(as_series);
      result["T"] = peak.T;
      result["p_bar"] = peak.p_bar;
    } catch (const NoPeakError& e) {
      result["T"] = nullptr;
      result["p_bar"] = nullptr;
      ctx.err << "note: " << e.what() << "\n";
    }
    outputs.write("reduced.csv", io::reduced_csv(series));
    outputs.write_json("result.json", result);
    if (svg) outputs.write("reduced.svg", io::series_svg(as_series));
    ctx.out << result.dump(2) << "\n";
    return kExitOk;
  }
};

struct AnsatzCmd {
  int L = 30;
  std::string g = "auto";
  std::string c = "auto";
  double A = 1.0, C0 = 1.0, C1 = 1.0;
  double dt = kDefaultTimeStep;
  std::string t_max = "auto";
  bool overlay = false;
  std::string out_dir = "out/ansatz";
  bool svg = false;

  void add(CLI::App& app) {
    app.add_option("--L", L, "even grid side")->capture_default_str();
    app.add_option("--g", g, "nonlinear coupling: real | auto")->capture_default_str();
    app.add_option("--c", c, "rescaling: real | auto | cmode:half-inverse-E | cmode:inverse-E")->capture_default_str();
    app.add_option("--A", A, "amplitude constant")->capture_default_str();
    app.add_option("--C0", C0, "linear phase constant")->capture_default_str();
    app.add_option("--C1", C1, "nonlinear phase constant")->capture_default_str();
    app.add_option("--dt", dt, "time grid step")->capture_default_str();
    app.add_option("--t-max", t_max, "time horizon: real | auto (pi T0)")->capture_default_str();
    app.add_flag("--overlay", overlay, "also run the full nonlinear walk on the same grid");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--svg", svg, "also write ansatz.svg");
  }

  int run(Context& ctx, Outputs& outputs) {
    const std::int64_t n = sizes_from_sides({L}).front();
    const double g_value = as_usage([&] { return resolve_g(n, g); });
    const double c_value = as_usage([&] { return resolve_c(n, c); });
    if (!(g_value > 0.0) || !(c_value > 0.0)) throw UsageError("ansatz needs g > 0 and c > 0");
    if (!(dt > 0.0)) throw UsageError("--dt must be positive");
    const RegimePeriods periods = regime_periods(n, g_value, c_value);
    const double horizon = t_max == "auto" ? std::numbers::pi * periods.T0 : parse_real("--t-max", t_max);
    if (!(horizon > 0.0)) throw UsageError("--t-max must be positive");
    ctx.config = {{"L", L},   {"N", n},   {"g", g_value}, {"c", c_value},         {"A", A},
                  {"C0", C0}, {"C1", C1}, {"dt", dt},     {"t_max", horizon},     {"overlay", overlay},
                  {"out", out_dir}, {"svg", svg}};

    TransitionEstimate est;
    try {
      est = estimate_transition_time(n, g_value, c_value);
    } catch (const RegimeOverlapError& e) {
      throw PhysicsError(std::string(e.what()) + "; the ansatz needs T1 < T0");
    }
    const AnsatzParams params = as_usage([&] { return AnsatzParams::from_couplings(n, g_value, c_value, A, C0, C1); });
    std::vector<double> grid;
    const auto steps = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
    for (std::int64_t k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) * dt);
    const auto points = solve_ansatz(params, grid);

    std::string csv = "t,x,residual,extrapolated\n";
    for (const auto& p : points) {
      csv += io::format_double(p.t) + ',' + io::format_double(p.x) + ',' + io::format_double(p.residual) + ',' +
             (p.extrapolated ? "1" : "0") + '\n';
    }
    outputs.write("ansatz.csv", csv);
    const json transition = {{"N", n},        {"g", g_value}, {"c", c_value},
                             {"T0", periods.T0}, {"T1", periods.T1}, {"t_s", est.t_s},
                             {"arcsin_argument", est.arcsin_argument}};
    outputs.write_json("transition.json", transition);

    Curve ansatz_curve;
    ansatz_curve.label = "ansatz";
    for (const auto& p : points) {
      ansatz_curve.x.push_back(p.t);
      ansatz_curve.y.push_back(p.x);
    }
    std::vector<Curve> curves{ansatz_curve};
    if (overlay) {
      const GridSpec grid_spec(L);
      SearchConfig cfg = SearchConfig::nonlinear(grid_spec, g_value, c_value);
      cfg.dt = dt;
      cfg.t_max = horizon;
      as_usage([&] { cfg.validate(); return 0; });
      check_feasible(n, g_value, c_value, c == "auto", ctx.err);
      const TimeSeries full = evolve(initial_state(cfg.marked.internal, grid_spec), cfg);
      std::string ov = "t,x_ansatz,p_gamma\n";
      Curve full_curve;
      full_curve.label = "lattice";
      for (std::size_t i = 0; i < std::min(full.size(), points.size()); ++i) {
        ov += io::format_double(points[i].t) + ',' + io::format_double(points[i].x) + ',' +
              io::format_double(full[i].p_gamma) + '\n';
        full_curve.x.push_back(full[i].t);
        full_curve.y.push_back(full[i].p_gamma);
      }
      outputs.write("overlay.csv", ov);
      curves.push_back(std::move(full_curve));
    }
    if (svg) outputs.write("ansatz.svg", svg_plot(curves, "t", "|a|^2"));
    ctx.out << transition.dump(2) << "\n";
    return kExitOk;
  }
};

struct PeakWidthCmd {
  std::vector<int> sides{10, 14, 20, 28, 40, 56, 64};
  std::string rule = "sqrt-N";
  std::string fit = "custom:1";
  std::string scale_dt = "auto";
  unsigned workers = 0;
  double dt = kDefaultTimeStep;
  int stride = 1;
  std::string out_dir = "out/peakwidth";
  bool svg = false;

  void add(CLI::App& app) {
    app.add_option("--L-list", sides, "comma-separated even grid sides")->delimiter(',')->capture_default_str();
    app.add_option("--rule", rule, "coupling rule: sqrt-N | log | log-inverse-E")->capture_default_str();
    app.add_option("--fit", fit, "fit model for the width")->capture_default_str();
    app.add_option("--scale-dt", scale_dt, "auto | on | off")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    app.add_option("--workers", workers, "parallel runs (0: available parallelism)")->capture_default_str();
    app.add_option("--dt", dt, "RK4 step")->capture_default_str();
    app.add_option("--stride", stride, "record every k-th step")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--svg", svg, "also write peakwidth.svg (log width vs log N)");
  }

  int run(Context& ctx, Outputs& outputs) {
    const auto sizes = sizes_from_sides(sides);
    const ParamRule param_rule = resolve_rule(rule);
    const FitModel model = as_usage([&] { return parse_fit_model(fit); });
    SweepOptions opt;
    opt.dt = dt;
    opt.sample_stride = stride;
    opt.scale_dt_with_coupling = scale_dt == "on" || (scale_dt == "auto" && rule == "sqrt-N");
    opt.stop_after_peak = true;
    opt.workers = workers;
    ctx.config = {{"L_list", sides}, {"rule", param_rule.name}, {"fit", fit}, {"options", sweep_options_json(opt)},
                  {"out", out_dir}, {"svg", svg}};
    for (const auto n : sizes) {
      const auto k = param_rule.couplings(n);
      check_feasible(n, k.g, k.c, true, ctx.err);
    }

    const SweepResult result = sweep_sizes(sizes, Mode::nonlinear, param_rule, opt);
    outputs.write("peakwidth.csv", io::sweep_csv(result));
    outputs.write_json("peakwidth.json", io::sweep_json(result));
    if (svg) {
      outputs.write("peakwidth.svg",
                    svg_plot({log_log_curve(result, [](const SweepRow& r) { return r.peak_width; }, "width")}, "ln N",
                             "ln width"));
    }
    const std::size_t failed = report_failures(result, ctx.err);
    if (result.successes() < kMinFitRows) {
      ctx.err << "fit skipped: " << result.successes() << " successful rows, need " << kMinFitRows << "\n";
      return failed ? kExitFailure : kExitOk;
    }
    const json width_fit = io::fit_json(fit_scaling(result, Quantity::peak_width, model));
    outputs.write_json("width_fit.json", width_fit);
    ctx.out << width_fit.dump(2) << "\n";
    return failed ? kExitFailure : kExitOk;
  }
};

/// Splices a subcommand's flat key=value config file into the argument
/// list.  Keys already given on the command line are left alone.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
  auto sub_at = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_at == args.end()) return args;
  const CLI::App* sub = app.get_subcommand_no_throw(*sub_at);

  std::optional<std::string> path;
  for (auto it = sub_at + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    if (it->starts_with("--config=")) path = it->substr(9);
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw UsageError("cannot read config file " + *path);
  auto given = [&](const std::string& flag) {
    return std::any_of(sub_at + 1, args.end(),
                       [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
  };
  auto trim = [](std::string v) {
    const auto first = v.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string{};
    return v.substr(first, v.find_last_not_of(" \t\r") - first + 1);
  };

  std::vector<std::string> out = args;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(*path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.starts_with("--")) key = key.substr(2);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || key == "config") {
      throw UsageError(*path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (given(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "on") {
        out.push_back(flag);
      } else if (value != "false" && value != "0" && value != "off") {
        throw UsageError(*path + ":" + std::to_string(lineno) + ": '" + key + "' takes true or false");
      }
      continue;
    }
    out.push_back(flag);
    out.push_back(value);
  }
  return out;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time quantum walk search on the periodic grid", "qwsearch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SearchCmd search;
  SweepCmd sweep;
  SweepCCmd sweep_c;
  ReducedCmd reduced;
  AnsatzCmd ansatz;
  PeakWidthCmd peakwidth;

  struct Entry {
    CLI::App* app;
    std::function<int(Context&, Outputs&)> run;
    const std::string* out_dir;
  };
  std::vector<Entry> entries;
  auto install = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(*sub);
    sub->add_option("--config", "flat key=value file; flags given on the command line win");
    entries.push_back({sub, [&cmd](Context& c, Outputs& o) { return cmd.run(c, o); }, &cmd.out_dir});
  };
  install("search", "single search run", search);
  install("sweep", "searching time and success probability versus N", sweep);
  install("sweep-c", "nonlinear runs at fixed N over rescaling strengths", sweep_c);
  install("reduced", "two-level reduced dynamics", reduced);
  install("ansatz", "self-consistent overlap ansatz and transition time", ansatz);
  install("peakwidth", "peak width versus N", peakwidth);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args, app);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const auto& entry : entries) {
    if (!entry.app->parsed()) continue;
    Context ctx{out, err, json::object()};
    Outputs outputs{fs::path(*entry.out_dir)};
    const auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
      code = entry.run(ctx, outputs);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n";
      code = kExitUsage;
    } catch (const InfeasibleCouplingError& e) {
      err << "infeasible parameters: " << e.what() << "\n";
      code = kExitFailure;
    } catch (const PhysicsError& e) {
      err << "infeasible parameters: " << e.what() << "\n";
      code = kExitFailure;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      code = kExitFailure;
    }
    // Failed runs that wrote partial results still list them.
    if (code == kExitOk || !outputs.empty()) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      try {
        outputs.write_manifest(args, ctx.config, wall);
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
      }
    }
    return code;
  }
  return kExitUsage;
}

int execute(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return execute(args, std::cout, std::cerr);
}

}  // namespace qwsearch::cli
