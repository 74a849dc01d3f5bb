#pragma once

// Serialisation of time series, search outcomes, sweeps and fits.
// CSV uses '.' as decimal point and 17 significant digits, so a parse of an
// emitted file reproduces the doubles bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "qwsearch/dynamics.hpp"
#include "qwsearch/reduced_model.hpp"
#include "qwsearch/scaling.hpp"
#include "qwsearch/search.hpp"

namespace qwsearch::io {

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::filesystem::path path)
      : std::runtime_error(what + ": " + path.string()), path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline constexpr std::string_view kSeriesHeader = "t,p_gamma,p_ball,delta,norm_sq";

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed", path);
}

inline std::string series_csv(const TimeSeries& series) {
  std::string out(kSeriesHeader);
  out += '\n';
  for (const auto& s : series.samples) {
    out += format_double(s.t) + ',' + format_double(s.p_gamma) + ',' + format_double(s.p_ball) + ',' +
           format_double(s.delta) + ',' + format_double(s.norm_sq) + '\n';
  }
  return out;
}

inline TimeSeries parse_series_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader) {
    throw std::invalid_argument("series CSV must start with header '" + std::string(kSeriesHeader) + "'");
  }
  TimeSeries series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double fields[5];
    std::size_t start = 0;
    for (int k = 0; k < 5; ++k) {
      const std::size_t end = k == 4 ? line.size() : line.find(',', start);
      if (end == std::string::npos) throw std::invalid_argument("short CSV row: '" + line + "'");
      fields[k] = parse_double(std::string_view(line).substr(start, end - start));
      start = end + 1;
    }
    series.samples.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  return series;
}

inline nlohmann::json series_json(const TimeSeries& series) {
  nlohmann::json j;
  for (const char* key : {"t", "p_gamma", "p_ball", "delta", "norm_sq"}) j[key] = nlohmann::json::array();
  for (const auto& s : series.samples) {
    j["t"].push_back(s.t);
    j["p_gamma"].push_back(s.p_gamma);
    j["p_ball"].push_back(s.p_ball);
    j["delta"].push_back(s.delta);
    j["norm_sq"].push_back(s.norm_sq);
  }
  return j;
}

inline std::string reduced_csv(const ReducedSeries& series) {
  std::string out = "t,p_gamma,delta,norm_sq\n";
  for (const auto& s : series) {
    out += format_double(s.t) + ',' + format_double(s.p_gamma) + ',' + format_double(s.delta) + ',' +
           format_double(s.norm_sq) + '\n';
  }
  return out;
}

/// Minimal line plot of (x, y) pairs: axes, tick labels at the extremes, one
/// polyline per curve.
struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
};

inline std::string svg_plot(const std::vector<Curve>& curves, const std::string& x_label, const std::string& y_label) {
  constexpr double width = 640, height = 400, margin = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (first) {
        x0 = x1 = c.x[i];
        y0 = y1 = c.y[i];
        first = false;
      }
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.y[i]);
      y1 = std::max(y1, c.y[i]);
    }
  }
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<line x1=\"" + num(margin) + "\" y1=\"" + num(height - margin) + "\" x2=\"" + num(width - margin) + "\" y2=\"" +
       num(height - margin) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(margin) + "\" y1=\"" + num(margin) + "\" x2=\"" + num(margin) + "\" y2=\"" +
       num(height - margin) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(width / 2) + "\" y=\"" + num(height - 10) + "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  s += "<text x=\"15\" y=\"" + num(height / 2) + "\" transform=\"rotate(-90 15 " + num(height / 2) +
       ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
  s += "<text x=\"" + num(margin) + "\" y=\"" + num(height - margin + 15) + "\" text-anchor=\"middle\">" + num(x0) + "</text>\n";
  s += "<text x=\"" + num(width - margin) + "\" y=\"" + num(height - margin + 15) + "\" text-anchor=\"middle\">" +
       num(x1) + "</text>\n";
  s += "<text x=\"" + num(margin - 5) + "\" y=\"" + num(margin) + "\" text-anchor=\"end\">" + num(y1) + "</text>\n";
  s += "<text x=\"" + num(margin - 5) + "\" y=\"" + num(height - margin) + "\" text-anchor=\"end\">" + num(y0) + "</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = colors[k % std::size(colors)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (i) s += ' ';
      s += num(px(c.x[i])) + ',' + num(py(c.y[i]));
    }
    s += "\"/>\n";
    if (!c.label.empty()) {
      s += "<text x=\"" + num(width - margin - 5) + "\" y=\"" + num(margin + 15.0 * (k + 1)) + "\" fill=\"" + color +
           "\" text-anchor=\"end\">" + c.label + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

inline std::string series_svg(const TimeSeries& series) {
  Curve c;
  for (const auto& smp : series.samples) {
    c.x.push_back(smp.t);
    c.y.push_back(smp.p_gamma);
  }
  return svg_plot({c}, "t", "p_gamma");
}

enum class Format { csv, json, svg };

/// Writes the series to path in the given format.
inline void emit_series(const TimeSeries& series, const std::filesystem::path& path, Format format) {
  switch (format) {
    case Format::csv: write_file(path, series_csv(series)); break;
    case Format::json: write_file(path, series_json(series).dump(2) + "\n"); break;
    case Format::svg: write_file(path, series_svg(series)); break;
  }
}

inline nlohmann::json result_json(const SearchOutcome& out, double peak_width_value) {
  const SearchConfig& cfg = out.config;
  return {{"N", cfg.grid.vertices()},
          {"L", cfg.grid.side()},
          {"mode", to_string(cfg.mode)},
          {"g", cfg.effective_g()},
          {"c", cfg.effective_c()},
          {"dt", cfg.dt},
          {"T", out.T},
          {"p_bar", out.p_bar},
          {"p_ball_at_T", out.p_ball_at_T},
          {"peak_width", peak_width_value}};
}

inline nlohmann::json fit_json(const ScalingFit& fit) {
  return {{"model", to_string(fit.model.kind)}, {"prefactor", fit.prefactor}, {"beta", fit.beta},
          {"gamma", fit.gamma},                 {"r_squared", fit.r_squared}, {"rows_used", fit.rows_used}};
}

inline std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "N,L,mode,g,c,dt,T,p_bar,p_ball_at_T,peak_width,error\n";
  for (const auto& r : sweep.rows) {
    std::string err = r.error.value_or("");
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += std::to_string(r.N) + ',' + std::to_string(r.L) + ',' + to_string(r.mode) + ',' + format_double(r.g) + ',' +
           format_double(r.c) + ',' + format_double(r.dt) + ',' + format_double(r.T) + ',' + format_double(r.p_bar) +
           ',' + format_double(r.p_ball_at_T) + ',' + format_double(r.peak_width) + ',' + err + '\n';
  }
  return out;
}

inline nlohmann::json sweep_json(const SweepResult& sweep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : sweep.rows) {
    nlohmann::json j = {{"N", r.N}, {"L", r.L}, {"mode", to_string(r.mode)}, {"g", r.g}, {"c", r.c}, {"dt", r.dt}};
    if (r.ok()) {
      j["T"] = r.T;
      j["p_bar"] = r.p_bar;
      j["p_ball_at_T"] = r.p_ball_at_T;
      j["peak_width"] = r.peak_width;
    } else {
      j["error"] = *r.error;
    }
    rows.push_back(std::move(j));
  }
  return {{"rows", rows}};
}

}  // namespace qwsearch::io
