#include "peakfdr/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace peakfdr;

namespace {
struct Run
{
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / "peakfdr_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}
} // namespace

TEST(Cli, UsageErrors)
{
  EXPECT_EQ(run({}).code, cli::usage);
  EXPECT_EQ(run({"bogus"}).code, cli::usage);
  EXPECT_EQ(run({"simulate"}).code, cli::usage); // --out required
  EXPECT_EQ(run({"detect", "--input", "x.csv", "--out", "y.json", "--alpha", "1.5"}).code, cli::usage);
  EXPECT_EQ(run({"detect", "--input", "x.csv", "--out", "y.json", "--policy", "up"}).code, cli::usage);
  EXPECT_EQ(run({"experiment", "--out", scratch("e.csv").string(), "--set", "zeta=1"}).code,
            cli::usage);
  EXPECT_EQ(run({"experiment", "--out", scratch("e.csv").string(), "--set", "nu=abc"}).code,
            cli::usage);
  EXPECT_EQ(run({"--help"}).code, cli::ok);
}

TEST(Cli, SimulateThenDetect)
{
  const auto csv = scratch("m.csv"), bin = scratch("m.bin");
  auto r = run({"simulate", "--out", csv.string(), "--binary", bin.string(), "--seed", "5"});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  EXPECT_EQ(slurp(csv).substr(0, 15), "index,t,mu,z,y\n");
  EXPECT_TRUE(std::filesystem::exists(manifest_path_for(csv)));

  // Same seed gives the same file.
  const auto csv2 = scratch("m2.csv");
  ASSERT_EQ(run({"simulate", "--out", csv2.string(), "--seed", "5"}).code, cli::ok);
  EXPECT_EQ(slurp(csv), slurp(csv2));

  const auto det = scratch("d.json"), det_bin = scratch("d_bin.json"), cands = scratch("c.csv");
  r = run({"detect", "--input", csv.string(), "--out", det.string(), "--method", "two-sample",
           "--candidates-csv", cands.string()});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  const auto j = json::parse(slurp(det));
  EXPECT_EQ(validate_detection_json(j), "");
  EXPECT_EQ(j["method"], "two-sample");
  EXPECT_TRUE(std::filesystem::exists(manifest_path_for(det)));
  EXPECT_EQ(slurp(cands).substr(0, 30), "index,t,height,neighbor+2,p_va");

  // Binary input has the same samples, so the detections agree.
  ASSERT_EQ(run({"detect", "--input", bin.string(), "--out", det_bin.string(), "--method",
                 "two-sample"}).code,
            cli::ok);
  EXPECT_EQ(json::parse(slurp(det_bin))["detected"], j["detected"]);
}

TEST(Cli, NeighborFloorMatchesOneSample)
{
  const auto csv = scratch("nf.csv");
  ASSERT_EQ(run({"simulate", "--out", csv.string(), "--seed", "8", "--b", "2"}).code, cli::ok);
  const auto a = scratch("nf1.json"), b = scratch("nf2.json");
  ASSERT_EQ(run({"detect", "--input", csv.string(), "--out", a.string()}).code, cli::ok);
  ASSERT_EQ(run({"detect", "--input", csv.string(), "--out", b.string(), "--method", "two-sample",
                 "--neighbor-floor"}).code,
            cli::ok);
  EXPECT_EQ(json::parse(slurp(a))["detected"], json::parse(slurp(b))["detected"]);
}

TEST(Cli, InputFormatErrors)
{
  const auto bad = scratch("bad.csv");
  std::ofstream(bad) << "a,b\n1,2\n";
  EXPECT_EQ(run({"detect", "--input", bad.string(), "--out", scratch("o.json").string()}).code,
            cli::input_format);
  EXPECT_EQ(run({"detect", "--input", scratch("missing.csv").string(), "--out",
                 scratch("o.json").string()}).code,
            cli::input_format);
  const auto badjson = scratch("bad.json");
  std::ofstream(badjson) << "{not json";
  EXPECT_EQ(run({"experiment", "--config", badjson.string(), "--out", scratch("e.csv").string()}).code,
            cli::input_format);
}

TEST(Cli, RuntimeFailureExitCode)
{
  // 200 signals of support 18 cannot be placed in 1000 samples.
  EXPECT_EQ(run({"simulate", "--out", scratch("x.csv").string(), "--signals", "200"}).code,
            cli::runtime_failure);
}

TEST(Cli, GridExpansionOrderAndPrecedence)
{
  const auto doc = json::parse(R"({"defaults": {"b": 2, "n_trials": 7, "base_seed": 4},
                                   "grids": [{"nu": [3, 4], "gamma": [1, 2, 3]}, {"nu": 5}]})");
  auto configs = cli::expand_config_document(doc, {});
  ASSERT_EQ(configs.size(), 7u);
  EXPECT_EQ(configs[0].nu, 3);
  EXPECT_EQ(configs[0].gamma, 1);
  EXPECT_EQ(configs[1].gamma, 2);
  EXPECT_EQ(configs[3].nu, 4);
  EXPECT_EQ(configs[6].nu, 5);
  EXPECT_EQ(configs[6].base_seed, 4u);
  for (const auto& c : configs)
    EXPECT_EQ(c.b, 2);

  configs = cli::expand_config_document(doc, {cli::parse_override("gamma=9"),
                                              cli::parse_override("policy=both-min")});
  ASSERT_EQ(configs.size(), 3u);
  EXPECT_EQ(configs[0].gamma, 9);
  EXPECT_EQ(configs[0].policy, SidePolicy::both_min);

  EXPECT_THROW(cli::parse_override("novalue"), cli::usage_error);
  EXPECT_THROW(cli::expand_grid(json::parse(R"({"nu": []})"), {}), cli::usage_error);
  EXPECT_THROW(cli::expand_grid(json::parse(R"({"alpha": 2})"), {}), cli::usage_error);
}

TEST(Cli, ExperimentOutputsAndDeterminism)
{
  const auto a = scratch("exp1.csv"), b = scratch("exp2.csv");
  const std::vector<std::string> base{"experiment", "--set", "nu=3,5", "--set", "gamma=4",
                                      "--trials", "10", "--seed", "2"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string(), "--parallel", "1"});
  ASSERT_EQ(run(args).code, cli::ok);
  args = base;
  args.insert(args.end(), {"--out", b.string(), "--parallel", "3"});
  ASSERT_EQ(run(args).code, cli::ok);
  EXPECT_EQ(slurp(a), slurp(b));
  const std::string text = slurp(a);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  auto side = a;
  side.replace_extension(".json");
  const auto j = json::parse(slurp(side));
  EXPECT_EQ(j["configs"].size(), 2u);
  EXPECT_EQ(j["configs"][0]["base_seed"], 2);
  EXPECT_TRUE(std::filesystem::exists(manifest_path_for(a)));
}

TEST(Cli, SeedFromEnvironment)
{
  const auto a = scratch("env1.csv"), b = scratch("env2.csv");
  ::setenv("PEAKFDR_SEED", "77", 1);
  ASSERT_EQ(run({"simulate", "--out", a.string()}).code, cli::ok);
  ::unsetenv("PEAKFDR_SEED");
  ASSERT_EQ(run({"simulate", "--out", b.string(), "--seed", "77"}).code, cli::ok);
  EXPECT_EQ(slurp(a), slurp(b));
  ::setenv("PEAKFDR_SEED", "notanumber", 1);
  EXPECT_EQ(run({"simulate", "--out", a.string()}).code, cli::usage);
  ::unsetenv("PEAKFDR_SEED");
}

TEST(Cli, SelftestSingleOracle)
{
  const auto r = run({"selftest", "--quick", "--oracle", "bh"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_NE(r.out.find("PASS bh"), std::string::npos);
  EXPECT_EQ(r.out.find("palm"), std::string::npos);
  EXPECT_EQ(run({"selftest", "--oracle", "nope"}).code, cli::usage);
}
