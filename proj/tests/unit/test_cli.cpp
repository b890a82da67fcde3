#include "popshift/cli.hpp"
#include "popshift/csv.hpp"
#include "popshift/error.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace popshift;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("popshift_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json small_scenario(std::size_t slices = 24)
{
  auto j = nlohmann::json::parse(R"({
    "grid": {"center": [8.5, 47.3], "width_m": 30000, "height_m": 30000, "cell_size_m": 1000, "scheme": "square"},
    "start_time": "2020-06-01T01:00:00Z",
    "baseline_field": {"kind": "hills", "min": 20, "max": 200, "sigma": 8.0},
    "noise_sigma": 0.25,
    "seed": 4,
    "events": [
      {"slice": 4, "kind": "order_placed", "label": "order", "zone": {"disk": {"center": [15, 15], "radius_cells": 4}}},
      {"slice": 14, "kind": "order_lifted", "label": "lift", "zone": {"disk": {"center": [15, 15], "radius_cells": 4}}}
    ],
    "evac_params": {"egress_rate": 0.3},
    "shelters": [{"cell": [25, 15], "uptake": 0.05}],
    "reference": {"penetration": 0.1, "cohort_effect": 0.0, "zone_block_cells": 5}
  })");
  j["duration_slices"] = slices;
  return j;
}

void write(const fs::path& p, const std::string& text)
{
  std::ofstream(p) << text;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr)
{
  args.insert(args.begin(), "popshift");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

int run_tool(const std::string& args)
{
  const int status = std::system((std::string("\"") + POPSHIFT_TOOL + "\" " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

// Synthesizes once and shares the output between tests.
const fs::path& synth_dir()
{
  static const fs::path dir = [] {
    const fs::path d = scratch("synth");
    write(d / "scenario.json", small_scenario().dump(2));
    EXPECT_EQ(run({"synth", "--config", (d / "scenario.json").string(), "--out", (d / "data").string()}), 0);
    return d / "data";
  }();
  return dir;
}

} // namespace

TEST(Cli, ShippedConfigsParse)
{
  const fs::path dir = fs::path(POPSHIFT_SOURCE_DIR) / "configs";
  for (const auto& e : fs::directory_iterator(dir)) {
    SCOPED_TRACE(e.path().string());
    const auto j = nlohmann::json::parse(slurp(e.path()));
    if (j.contains("baseline_field")) {
      EXPECT_NO_THROW(scenario_from_json(j));
    } else {
      const cli::PipelineConfig c = cli::load_pipeline_config(e.path().string());
      EXPECT_FALSE(c.scenario.empty());
      EXPECT_TRUE(fs::exists(c.scenario));
    }
  }
}

TEST(Cli, SynthWritesInputs)
{
  for (const char* f : {"slices.csv", "grid.json", "events.json", "truth.csv", "mask_evacuated.json", "mask_shelter.json",
                        "reference.csv", "zones.geojson", "pipeline.json"})
    EXPECT_TRUE(fs::exists(synth_dir() / f)) << f;
}

TEST(Cli, Penetration)
{
  const fs::path out = scratch("penetration");
  ASSERT_EQ(run({"penetration", "--config", (synth_dir() / "pipeline.json").string(), "--out", out.string()}), 0);
  const auto rows = read_csv(out / "regression.csv");
  ASSERT_GE(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "level");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    SCOPED_TRACE(rows[r][0]);
    // no cohort effect and no noise in the reference raster: the fit is exact
    if (rows[r][0] != "cell" && rows[r][0] != "zone") continue;
    EXPECT_NEAR(std::stod(rows[r][1]), 0.1, 1e-3);
    EXPECT_GT(std::stod(rows[r][3]), 0.99);
  }
  for (const char* f : {"penetration_cells.geojson", "penetration_zones.geojson"}) {
    const auto j = nlohmann::json::parse(slurp(out / f));
    EXPECT_EQ(j.at("type"), "FeatureCollection");
    EXPECT_FALSE(j.at("features").empty());
  }
  EXPECT_TRUE(fs::exists(out / "penetration_cells.svg"));
  EXPECT_TRUE(fs::exists(out / "demographics.csv"));
}

TEST(Cli, Dynamics)
{
  const fs::path out = scratch("dynamics");
  ASSERT_EQ(run({"dynamics", "--config", (synth_dir() / "pipeline.json").string(), "--out", out.string()}), 0);
  const auto rows = read_csv(out / "regional_z.csv");
  // 24 slices for each of all + three roles
  EXPECT_EQ(rows.size(), 1u + 24u * 4u);
  double lowest = 0.0;
  for (const auto& r : rows)
    if (r[0] == "evacuated") lowest = std::min(lowest, std::stod(r[3]));
  EXPECT_LT(lowest, -3.0);
  EXPECT_TRUE(fs::exists(out / "dynamics_z_evacuated.svg"));
  EXPECT_TRUE(fs::exists(out / "total_difference.csv"));
}

TEST(Cli, Trend)
{
  const fs::path out = scratch("trend");
  ASSERT_EQ(run({"trend", "--config", (synth_dir() / "pipeline.json").string(), "--out", out.string(), "--window", "5"}), 0);
  const auto rows = read_csv(out / "trend_summary.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[2][1], "order");
  EXPECT_GT(std::stoi(rows[2][5]), 30);  // evacuated cells decline
  EXPECT_TRUE(fs::exists(out / "tipping.csv"));
  EXPECT_NO_THROW(nlohmann::json::parse(slurp(out / "trend_1_order.geojson")));
}

TEST(Cli, Emerging)
{
  const fs::path out = scratch("emerging");
  ASSERT_EQ(run({"emerging", "--config", (synth_dir() / "pipeline.json").string(), "--out", out.string(), "--bin", "95"}), 0);
  const auto j = nlohmann::json::parse(slurp(out / "emerging.geojson"));
  EXPECT_EQ(j.at("features").size(), 900u);
  EXPECT_TRUE(fs::exists(out / "emerging_order.geojson"));
  EXPECT_TRUE(fs::exists(out / "spots" / "spots_000.geojson"));
  bool cold = false;
  for (const auto& r : read_csv(out / "emerging_summary.csv"))
    if (r[0] == "order" && r[4] == "cold" && r[3] != "none" && std::stoi(r[5]) > 0) cold = true;
  EXPECT_TRUE(cold);
}

TEST(Cli, ExitCodes)
{
  const std::string pipeline = (synth_dir() / "pipeline.json").string();
  const fs::path tmp = scratch("exit");
  EXPECT_EQ(run_tool("--help"), 0);
  EXPECT_EQ(run_tool("trend"), 2);
  EXPECT_EQ(run_tool("frobnicate --config x"), 2);
  EXPECT_EQ(run_tool("emerging --bin 80 --config " + pipeline), 2);
  EXPECT_EQ(run_tool("trend --config " + (tmp / "missing.json").string()), 2);

  // slices file with a malformed row
  auto j = nlohmann::json::parse(slurp(pipeline));
  fs::copy_file(synth_dir() / "grid.json", tmp / "grid.json");
  write(tmp / "slices.csv", slurp(synth_dir() / "slices.csv") + "2020-06-01T01:00:00Z,8.5,47.3,abc,1,1,,,\n");
  j["slices"] = "slices.csv";
  j["grid_file"] = "grid.json";
  j.erase("events");
  j.erase("regions");
  j.erase("reference_raster");
  j.erase("zones");
  write(tmp / "bad.json", j.dump());
  EXPECT_EQ(run_tool("trend --config " + (tmp / "bad.json").string() + " --out " + (tmp / "o").string()), 3);

  // empty region
  j["slices"] = (synth_dir() / "slices.csv").string();
  j["regions"] = {{"nothing", {{"cells", nlohmann::json::array()}}}};
  write(tmp / "empty.json", j.dump());
  EXPECT_EQ(run_tool("dynamics --config " + (tmp / "empty.json").string() + " --out " + (tmp / "o").string()), 2);
}

TEST(Cli, EmergingNeedsEightSlices)
{
  const fs::path d = scratch("short");
  auto j = small_scenario(6);
  j.erase("events");
  write(d / "scenario.json", j.dump());
  ASSERT_EQ(run({"synth", "--config", (d / "scenario.json").string(), "--out", (d / "data").string()}), 0);
  std::string err;
  EXPECT_EQ(run({"emerging", "--config", (d / "data" / "pipeline.json").string(), "--out", (d / "o").string()}, &err), 2);
  EXPECT_NE(err.find("error"), std::string::npos);
  EXPECT_EQ(run({"trend", "--config", (d / "data" / "pipeline.json").string(), "--out", (d / "o").string()}), 0);
}

TEST(Cli, OverridesApply)
{
  cli::PipelineConfig c = cli::load_pipeline_config((synth_dir() / "pipeline.json").string());
  EXPECT_EQ(c.significance, SignificanceRule::fdr);
  cli::Overrides o;
  o.alpha = 0.01;
  o.bin = 99;
  o.window = 7;
  cli::apply_overrides(c, o);
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.confidence_bin, 99);
  EXPECT_EQ(c.tipping_window, 7u);
  EXPECT_THROW(cli::pipeline_config_from_json(nlohmann::json::parse(R"({"alpha": 2})"), ""), Error);
}
