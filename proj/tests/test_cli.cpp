#include "fairclust/cli.hpp"
#include "fairclust/fairness.hpp"
#include "support/brute.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace fairclust;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(FAIRCLUST_DATA_DIR) + "/two_clusters.csv";

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fairclust");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / ("fairclust_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("lp-round on the bundled fixture stays within the certified bound") {
  const auto r = run_cli({"--input", kFixture, "--mode", "lp-round", "--k", "2", "--alpha", "1", "--p", "2"});
  REQUIRE(r.code == kExitOk);
  const auto rep = nlohmann::json::parse(r.out);
  // fair optimum worked out by hand: 1+1+2 in the unit square, 16+16+32 in the 4-square
  const double opt = 68.0;
  CHECK(rep["cost"].get<double>() <= (rep["beta"].get<double>() + 0.01) * opt * (1 + 1e-6));
  CHECK(rep["fairness_max_ratio"].get<double>() <= 3.0);
  CHECK(rep["schema_version"] == kReportSchemaVersion);
  CHECK(rep["certificate_chain"]["links"].size() > 5);
  CHECK(rep["timings"].empty());
  CHECK(rep["config"]["k"] == 2);
}

TEST_CASE("every mode writes a report with the documented exit code") {
  const auto centers = write_file("c.json", R"({"centers": [0, 4]})");
  const auto audit = run_cli({"-i", kFixture, "--mode", "audit", "--k", "2", "--centers", centers});
  REQUIRE(audit.code == kExitOk);
  const auto a = nlohmann::json::parse(audit.out);
  CHECK(a["ratios"].size() == 8);
  CHECK_FALSE(a.contains("certificate_chain"));
  CHECK_FALSE(a.contains("cost"));

  const auto kc = run_cli({"-i", kFixture, "--mode", "kcenter", "--k", "2"});
  REQUIRE(kc.code == kExitOk);
  CHECK(nlohmann::json::parse(kc.out)["p"].is_null());

  const auto oracle = run_cli({"-i", kFixture, "--mode", "oracle", "--k", "2", "--p", "2"});
  REQUIRE(oracle.code == kExitOk);
  CHECK(nlohmann::json::parse(oracle.out)["cost"].get<double>() == doctest::Approx(68.0));

  std::string big = "id,w,x1\n";
  for (int i = 0; i < 20; ++i) big += std::to_string(i) + ",1," + std::to_string(i * i) + "\n";
  const auto too_large = run_cli({"-i", write_file("big.csv", big), "--mode", "oracle", "--k", "2"});
  CHECK(too_large.code == kExitError);
  CHECK(too_large.err.find("too large") != std::string::npos);

  const std::string nofair =
      "id,w,x1,x2\n0,1,7,13\n1,1,12,19\n2,1,5,22\n3,1,29,22\n4,1,27,17\n5,1,3,19\n"
      "6,1,4,2\n7,1,21,23\n8,1,16,1\n9,1,15,13\n10,1,21,17\n11,1,0,13\n";
  const auto inf = run_cli({"-i", write_file("nofair.csv", nofair), "--mode", "oracle", "--k", "4"});
  CHECK(inf.code == kExitInfeasible);
  CHECK(nlohmann::json::parse(inf.out)["feasible"] == false);

  const auto fl = write_file("fl.json", R"({"p": 1, "facilities": [{"id": 0, "cost": 1, "coords": [0]}],
    "clients": [{"id": 1, "demand": 2, "coords": [3]}], "matroid": {"parts": [[0]], "caps": [1]}})");
  const auto flr = run_cli({"-i", fl, "--mode", "fl"});
  REQUIRE(flr.code == kExitOk);
  CHECK(nlohmann::json::parse(flr.out)["cost"].get<double>() == doctest::Approx(7.0));
}

TEST_CASE("parameter and input errors exit 1 before any compute") {
  CHECK(run_cli({"-i", kFixture, "--mode", "lp-round", "--k", "0"}).code == kExitError);
  CHECK(run_cli({"-i", kFixture, "--mode", "lp-round", "--k", "2", "--alpha", "0.5"}).code == kExitError);
  CHECK(run_cli({"-i", kFixture, "--mode", "kcenter", "--k", "2", "--epsilon", "0.7"}).code == kExitError);
  CHECK(run_cli({"-i", kFixture, "--mode", "audit", "--k", "2"}).code == kExitError);
  CHECK(run_cli({"--mode", "lp-round", "--k", "2"}).code == kExitError);
  CHECK(run_cli({"-i", kFixture, "--mode", "nonsense"}).code == kExitError);
  CHECK(run_cli({"-i", "/nonexistent/file.csv", "--k", "2"}).code == kExitError);
  CHECK(run_cli({"-i", kFixture, "--k", "9"}).code == kExitError);

  const auto bad = run_cli({"-i", write_file("bad.csv", "id,w,x1\n0,1,0\n1,one,2\n"), "--k", "1"});
  CHECK(bad.code == kExitError);
  CHECK(bad.err.find("line 3") != std::string::npos);

  const auto centers = write_file("bad.json", "{\n\"centers\": [0,\n");
  const auto badj = run_cli({"-i", kFixture, "--mode", "audit", "--k", "2", "--centers", centers});
  CHECK(badj.code == kExitError);
  CHECK(badj.err.find("line") != std::string::npos);

  CHECK(run_cli({"--help"}).code == kExitOk);
  CHECK(run_cli({"--bogus"}).code == kExitError);
}

TEST_CASE("identical configurations give byte-identical reports") {
  for (const char* mode : {"lp-round", "kcenter", "oracle"}) {
    const std::vector<std::string> args{"-i", kFixture, "--mode", mode, "--k", "3", "--alpha", "1.5", "--p", "2"};
    const auto a = run_cli(args), b = run_cli(args);
    CHECK(a.code == kExitOk);
    CHECK(a.out == b.out);
  }
  const auto out1 = (scratch() / "r1.json").string(), out2 = (scratch() / "r2.json").string();
  run_cli({"-i", kFixture, "--k", "2", "--exact-rational", "-o", out1});
  run_cli({"-i", kFixture, "--k", "2", "--exact-rational", "-o", out2});
  std::ifstream f1(out1), f2(out2);
  const std::string s1{std::istreambuf_iterator<char>(f1), {}}, s2{std::istreambuf_iterator<char>(f2), {}};
  CHECK_FALSE(s1.empty());
  CHECK(s1 == s2);
}

TEST_CASE("timings and lp dumps are opt-in") {
  const auto t = run_cli({"-i", kFixture, "--k", "2", "--emit-timings"});
  const auto rep = nlohmann::json::parse(t.out);
  CHECK(rep["timings"].contains("matroid_fl"));
  const auto dir = scratch() / "lps";
  fs::remove_all(dir);
  REQUIRE(run_cli({"-i", kFixture, "--k", "2", "--dump-lp", dir.string()}).code == kExitOk);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.path().extension() == ".lp";
  CHECK(files >= 3);
}

TEST_CASE("synthetic generation") {
  const auto a = run_cli({"generate", "--n", "30", "--seed", "5", "--clusters", "2", "--spread", "0.5"});
  const auto b = run_cli({"generate", "--n", "30", "--seed", "5", "--clusters", "2", "--spread", "0.5"});
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out != run_cli({"generate", "--n", "30", "--seed", "6"}).out);

  const auto one = run_cli({"generate", "--n", "1"});
  CHECK(std::count(one.out.begin(), one.out.end(), '\n') == 2);

  // dense cluster 0 (std 0.5) and sparse cluster 1 (std 2.5): radii split in two groups
  SyntheticSpec spec;
  spec.n = 40;
  spec.clusters = 2;
  spec.spread = 0.5;
  spec.seed = 5;
  const auto ds = Dataset::from_points(generate_synthetic(spec));
  const auto r = testsupport::brute_fair_radii(ds.distances(), 4);
  double dense = 0, sparse = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) (i % 2 ? sparse : dense) += r(static_cast<Eigen::Index>(i)) / 20;
  CHECK(sparse > 2 * dense);
}

TEST_CASE("alpha sweep") {
  const auto serial = run_cli({"sweep", "-i", kFixture, "--k", "2", "--p", "2", "--alphas", "1,1.5,2,3", "--jobs", "1"});
  const auto parallel = run_cli({"sweep", "-i", kFixture, "--k", "2", "--p", "2", "--alphas", "1,1.5,2,3", "--jobs", "4"});
  REQUIRE(serial.code == kExitOk);
  CHECK(serial.out == parallel.out);
  CHECK(serial.out.rfind("alpha,feasible,cost,fairness_max_ratio,regions,centers\n", 0) == 0);
  CHECK(std::count(serial.out.begin(), serial.out.end(), '\n') == 5);
  CHECK(run_cli({"sweep", "-i", kFixture, "--k", "2", "--alphas", "0.5"}).code == kExitError);
}
