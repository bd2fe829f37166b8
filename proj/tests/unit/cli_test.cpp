#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace {

using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "stopwise");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = stopwise::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const char* name) { return std::string(STOPWISE_TEST_DATA_DIR) + "/" + name; }

std::string drop_header(const std::string& csv) {
  EXPECT_EQ(csv.rfind("# stopwise ", 0), 0u);
  return csv.substr(csv.find('\n') + 1);
}

TEST(Cli, Figure1Csv) {
  const Result r = run({"figure1", "--points-per-decade", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string body = drop_header(r.out);
  EXPECT_EQ(body.substr(0, body.find('\n')), "gamma_lower,gamma_upper,rejected_zeros");
  EXPECT_NE(body.find("-inf,"), std::string::npos);
  EXPECT_NE(body.find(",0,8\n"), std::string::npos);
}

TEST(Cli, Figure1JsonAndBadPrior) {
  const Result r = run({"figure1", "--points-per-decade", "5", "--N", "3", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j.contains("bands"));
  EXPECT_EQ(run({"figure1", "--prior", "beta:1"}).code, 1);
}

TEST(Cli, SolveAndOracleAgreeOnHouseModel) {
  const Result s = run({"solve", "--model", data("house_beta_n3.json"), "--format", "json"});
  const Result o = run({"oracle", "--model", data("house_beta_n3.json"), "--format", "json"});
  ASSERT_EQ(s.code, 0) << s.err;
  ASSERT_EQ(o.code, 0) << o.err;
  const double vs = json::parse(s.out)["value"];
  const double vo = json::parse(o.out)["value"];
  EXPECT_NEAR(vs, vo, 1e-12);
  EXPECT_NEAR(vo, -0.657019801099788, 1e-12);
}

TEST(Cli, SolveAndOracleAgreeOnPomdp) {
  const Result s = run({"solve", "--model", data("quality_pomdp.json"), "--N", "4", "--format", "json"});
  const Result o = run({"oracle", "--model", data("quality_pomdp.json"), "--N", "4", "--format", "json"});
  ASSERT_EQ(s.code, 0) << s.err;
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(json::parse(s.out)["value"].get<double>(), json::parse(o.out)["value"].get<double>(), 1e-12);
  EXPECT_EQ(run({"solve", "--model", data("quality_pomdp.json")}).code, 1);
}

TEST(Cli, HorizonZero) {
  const Result r = run({"solve", "--model", data("quality_pomdp.json"), "--N", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  // Stop at once: U(g(lo)) = e^{-1*0} / -1.
  EXPECT_EQ(r.out, "-1\n");
}

TEST(Cli, UtilityOverride) {
  const Result r = run({"oracle", "--model", data("house_beta_n3.json"), "--utility", "linear", "--N", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.4\n");
  EXPECT_EQ(run({"oracle", "--model", data("house_beta_n3.json"), "--utility", "cubic"}).code, 1);
  EXPECT_EQ(run({"oracle", "--model", data("house_beta_n3.json"), "--utility", "exponential:1"}).code, 1);
}

TEST(Cli, ReservationTables) {
  const Result fin = run({"reservation", "--model", data("house_beta_n3.json")});
  ASSERT_EQ(fin.code, 0) << fin.err;
  EXPECT_EQ(drop_header(fin.out).substr(0, 19), "stage,belief,level\n");
  const Result exp = run({"reservation", "--model", data("house_beta_n3.json"), "--steps-to-go"});
  ASSERT_EQ(exp.code, 0) << exp.err;
  EXPECT_EQ(drop_header(exp.out).substr(0, 25), "steps_to_go,belief,level\n");
  const Result cont = run({"reservation", "--model", data("house_invgamma_n3.json"), "--format", "json"});
  ASSERT_EQ(cont.code, 0) << cont.err;
  EXPECT_FALSE(json::parse(cont.out)["rows"].empty());
  EXPECT_EQ(run({"reservation", "--model", data("quality_pomdp.json")}).code, 1);
}

TEST(Cli, InfiniteHouse) {
  const Result r = run({"infinite", "--model", data("house_beta_infinite.json"), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LT(j["last_increment"].get<double>(), 1e-10);
  const Result lin = run({"infinite", "--model", data("house_beta_n3.json"), "--utility", "linear", "--depth", "0"});
  ASSERT_EQ(lin.code, 0) << lin.err;
  EXPECT_NE(lin.out.find("0.617103174603"), std::string::npos);
}

TEST(Cli, NonConvergenceExitsTwo) {
  const Result r = run({"infinite", "--model", data("house_beta_infinite.json"), "--max-iter", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("last increment"), std::string::npos);
  EXPECT_EQ(run({"infinite", "--model", data("quality_pomdp.json"), "--max-iter", "1", "--tol", "1e-15"}).code, 2);
}

TEST(Cli, ContinuousInfiniteRejected) {
  EXPECT_EQ(run({"infinite", "--model", data("house_invgamma_n3.json")}).code, 1);
}

TEST(Cli, BudgetExceededExitsTwo) {
  EXPECT_EQ(run({"solve", "--model", data("quality_pomdp.json"), "--N", "6", "--budget", "3"}).code, 2);
}

TEST(Cli, SimulateIsDeterministic) {
  const std::vector<std::string> args = {"simulate", "--model", data("house_beta_n3.json"), "--samples", "20000",
                                         "--seed", "9", "--format", "json"};
  std::vector<std::string> one = args, four = args;
  one.insert(one.end(), {"--threads", "1"});
  four.insert(four.end(), {"--threads", "4"});
  const Result a = run(one);
  const Result b = run(four);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const json j = json::parse(a.out);
  EXPECT_NEAR(j["dp_value"].get<double>(), -0.657019801099788, 1e-12);
  EXPECT_LT(std::abs(j["mean"].get<double>() - j["dp_value"].get<double>()), 5 * j["std_error"].get<double>());
  EXPECT_EQ(j["model_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, CsvOutputIsReproducibleApartFromHeader) {
  const Result a = run({"reservation", "--model", data("house_beta_n3.json")});
  const Result b = run({"reservation", "--model", data("house_beta_n3.json")});
  EXPECT_EQ(drop_header(a.out), drop_header(b.out));
}

TEST(Cli, OutputFile) {
  const std::string path = (std::filesystem::temp_directory_path() / "stopwise_cli_test.csv").string();
  const Result r = run({"reservation", "--model", data("house_beta_n3.json"), "-o", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# stopwise reservation generated ", 0), 0u);
  std::remove(path.c_str());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"solve", "--bogus"}).code, 1);
  EXPECT_EQ(run({"solve", "--model", "/nonexistent.json", "--N", "2"}).code, 1);
  EXPECT_EQ(run({"solve", "--model", data("quality_pomdp.json"), "--N", "2", "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

}  // namespace
