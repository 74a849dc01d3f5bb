#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "qwsearch/io.hpp"

namespace qwsearch {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qwsearch_io_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(SeriesCsv, EmptySeriesIsHeaderOnly) {
  EXPECT_EQ(io::series_csv(TimeSeries{}), "t,p_gamma,p_ball,delta,norm_sq\n");
  EXPECT_TRUE(io::parse_series_csv("t,p_gamma,p_ball,delta,norm_sq\n").empty());
}

TEST(SeriesCsv, RoundTripIsBitwise) {
  const SearchOutcome out = run_search(SearchConfig::linear(GridSpec(10)));
  const TimeSeries parsed = io::parse_series_csv(io::series_csv(out.series));
  EXPECT_EQ(parsed, out.series);

  TimeSeries awkward;
  awkward.samples.push_back({0.1, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(), -4.0 / 900.0,
                             std::nextafter(1.0, 2.0)});
  awkward.samples.push_back({1e300, 0.0, -0.0, 5e-324, 0.999999999999});
  EXPECT_EQ(io::parse_series_csv(io::series_csv(awkward)), awkward);
}

TEST(SeriesCsv, RejectsMalformedInput) {
  EXPECT_THROW(io::parse_series_csv("t,p\n"), std::invalid_argument);
  EXPECT_THROW(io::parse_series_csv("t,p_gamma,p_ball,delta,norm_sq\n1,2,3\n"), std::invalid_argument);
  EXPECT_THROW(io::parse_series_csv("t,p_gamma,p_ball,delta,norm_sq\n1,2,3,4,x\n"), std::invalid_argument);
}

TEST(SeriesCsv, UsesDecimalPointAndSeventeenDigits) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_EQ(io::parse_double("0.10000000000000001"), 0.1);
}

TEST(EmitSeries, WritesEveryFormat) {
  const fs::path dir = scratch_dir("emit");
  TimeSeries s;
  s.samples.push_back({0.0, 0.0, 0.04, -0.04, 1.0});
  s.samples.push_back({0.5, 0.25, 0.3, 0.02, 1.0});
  io::emit_series(s, dir / "nested" / "series.csv", io::Format::csv);
  io::emit_series(s, dir / "series.json", io::Format::json);
  io::emit_series(s, dir / "series.svg", io::Format::svg);
  EXPECT_EQ(slurp(dir / "nested" / "series.csv"), io::series_csv(s));
  const auto j = nlohmann::json::parse(slurp(dir / "series.json"));
  EXPECT_EQ(j["p_gamma"][1].get<double>(), 0.25);
  EXPECT_EQ(j["norm_sq"].size(), 2u);
  const std::string svg = slurp(dir / "series.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  fs::remove_all(dir);
}

TEST(EmitSeries, UnwritablePathNamesThePath) {
  const fs::path dir = scratch_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  const fs::path target = dir / "file" / "series.csv";
  try {
    io::emit_series(TimeSeries{}, target, io::Format::csv);
    FAIL() << "expected IoError";
  } catch (const io::IoError& e) {
    EXPECT_EQ(e.path(), target);
    EXPECT_NE(std::string(e.what()).find(target.string()), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(ResultJson, Fields) {
  const SearchOutcome out = run_search(SearchConfig::linear(GridSpec(10)));
  const auto j = io::result_json(out, 1.5);
  for (const char* key : {"N", "L", "mode", "g", "c", "dt", "T", "p_bar", "p_ball_at_T", "peak_width"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["N"], 100);
  EXPECT_EQ(j["mode"], "linear");
  EXPECT_EQ(j["T"].get<double>(), out.T);
}

TEST(FitJson, Fields) {
  ScalingFit fit;
  fit.model = FitModel::quarter_power();
  fit.prefactor = 1.0;
  fit.beta = 0.25;
  fit.gamma = 0.75;
  fit.r_squared = 0.99;
  fit.rows_used = 7;
  const auto j = io::fit_json(fit);
  EXPECT_EQ(j["model"], "quarter_power");
  EXPECT_EQ(j["rows_used"], 7);
  EXPECT_EQ(j.size(), 6u);
}

TEST(SweepCsv, ErrorColumnIsSanitised) {
  SweepResult r;
  SweepRow ok;
  ok.N = 100;
  ok.L = 10;
  ok.T = 7.5;
  SweepRow bad = ok;
  bad.error = "drift, too large\nreduce dt";
  r.rows = {ok, bad};
  const std::string csv = io::sweep_csv(r);
  std::istringstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10) << line;
  }
  EXPECT_EQ(lines, 3);
  const auto j = io::sweep_json(r);
  EXPECT_EQ(j["rows"][0]["T"].get<double>(), 7.5);
  EXPECT_TRUE(j["rows"][1].contains("error"));
  EXPECT_FALSE(j["rows"][1].contains("T"));
}

}  // namespace
}  // namespace qwsearch
