#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "finsler/cli.hpp"

using namespace finsler;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "finsler");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Cli, VerifyExitCodes) {
  auto r = cli({"verify", "--model", "cfc-kropina", "--samples", "8"});
  EXPECT_EQ(r.code, kExitPass) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.at("ok").get<bool>());
  EXPECT_EQ(j.at("n_samples"), 8);

  r = cli({"verify", "--model", "cfc-kropina", "--samples", "8", "--tol", "euler_identity=0"});
  EXPECT_EQ(r.code, kExitCheckFailure);

  EXPECT_EQ(cli({"verify", "--model", "no-such-model"}).code, kExitConfigError);
  EXPECT_EQ(cli({"verify", "--model", "/nonexistent/model.json"}).code, kExitConfigError);
  EXPECT_EQ(cli({"verify"}).code, kExitConfigError);
  EXPECT_EQ(cli({"verify", "--model", "cfc-kropina", "--jet-order", "9"}).code, kExitConfigError);
  EXPECT_EQ(cli({"verify", "--model", "cfc-kropina", "--dim", "4"}).code, kExitConfigError);
  EXPECT_EQ(cli({"verify", "--model", "cfc-kropina", "--tol", "bogus=1"}).code, kExitConfigError);
  EXPECT_EQ(cli({"--help"}).code, kExitPass);
}

TEST(Cli, ModelFileAndFlagPrecedence) {
  const auto path = temp_path("finsler_cli_model.json");
  {
    std::ofstream f(path);
    f << R"({"family": "warped-kropina", "dim": 3, "params": {"h": "cosh"}, "seed": 5})";
  }
  auto r = cli({"verify", "--model", path, "--samples", "4"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("seed"), 5);
  EXPECT_EQ(j.at("model").at("params").at("h"), "cosh");

  r = cli({"verify", "--model", path, "--samples", "4", "--seed", "11", "--param", "h=\"poly\"",
           "--dim", "4"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("seed"), 11);
  EXPECT_EQ(j.at("model").at("params").at("h"), "poly");
  EXPECT_EQ(j.at("model").at("dim"), 4);

  {
    std::ofstream f(path);
    f << R"({"family": "warped-kropina", "extra": 1})";
  }
  EXPECT_EQ(cli({"verify", "--model", path}).code, kExitConfigError);
  std::filesystem::remove(path);
}

TEST(Cli, CsvOutputToFile) {
  const auto path = temp_path("finsler_cli_report.csv");
  const auto r = cli({"verify", "--model", "minkowski-parallel", "--samples", "3", "--format", "csv",
                      "--per-sample", "--out", path});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header.rfind("check,sample,residual,x1", 0), 0u);
  std::filesystem::remove(path);
}

TEST(Cli, CurvatureAtAPoint) {
  auto r = cli({"curvature", "--model", "cfc-kropina", "--at", "0,0,0", "--dir", "1,0,0.5"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("K").get<double>(), 0.25, 1e-8);
  EXPECT_EQ(j.at("expected").at("K"), 0.25);

  // K = 3/4 * 1.04^2 / 1.14^4 at x = (0.1, 0, 0), y = (1, 0.2, 0).
  r = cli({"curvature", "--model", "projflat-eta", "--at", "0.1,0,0", "--dir", "1,0.2,0"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  j = nlohmann::json::parse(r.out);
  const double expect = 0.75 * 1.04 * 1.04 / std::pow(1.14, 4);
  EXPECT_NEAR(j.at("K").get<double>(), expect, 1e-8 * expect);

  r = cli({"curvature", "--model", "minkowski-parallel", "--at", "0.1,0.2,0.3", "--dir", "1,0,0"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  j = nlohmann::json::parse(r.out);
  for (const auto& row : j.at("R"))
    for (const auto& v : row) EXPECT_EQ(v.get<double>(), 0.0);

  r = cli({"curvature", "--model", "cfc-kropina", "--at", "0,0,0", "--dir", "0,0,-1"});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(cli({"curvature", "--model", "cfc-kropina", "--at", "2,0,0", "--dir", "0,0,1"}).code,
            kExitConfigError);
  EXPECT_EQ(cli({"curvature", "--model", "cfc-kropina", "--at", "0,0", "--dir", "0,0,1"}).code,
            kExitConfigError);
}

TEST(Cli, SprayDiff) {
  const auto r = cli({"spray-diff", "--model", "warped-kropina", "--samples", "5"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j.at("max_residual").get<double>(), 1e-9);
}

TEST(Cli, ModelsListAndShow) {
  auto r = cli({"models", "list"});
  ASSERT_EQ(r.code, kExitPass);
  for (const char* name : {"minkowski-parallel", "minkowski-conformal", "cfc-kropina",
                           "warped-kropina", "projflat-eta", "randers-lift"}) {
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
  }
  r = cli({"models", "show", "projflat-eta"});
  ASSERT_EQ(r.code, kExitPass);
  EXPECT_NE(r.out.find("F ="), std::string::npos) << r.out;
  EXPECT_EQ(cli({"models", "show", "nope"}).code, kExitConfigError);
}
