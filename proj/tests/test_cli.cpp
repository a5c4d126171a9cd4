#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "tradenet/cli.hpp"

using namespace tradenet;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "tradenet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Files below `root` keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
  return out;
}

const std::string kSmall[] = {"--days", "40", "--traders", "1500", "--manipulated-traders", "1200",
                              "--colluders", "250"};

}  // namespace

TEST(Cli, SimulateThenDetect) {
  TempDir dir("cli-e2e");
  const auto sim = run({"simulate", "--honest", "10", "--manipulated", "2", "--seed", "7", "--out", dir.path()});
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_EQ(io::csv_files(dir / "corpus").size(), 12u);
  EXPECT_TRUE(fs::exists(dir / "truth.json"));

  const auto det = run({"detect", (dir / "corpus").string(), "--out", (dir / "det").string(), "-q"});
  EXPECT_EQ(det.code, 1) << det.err;
  const auto reports = io::Json::parse(io::read_file(dir / "det/reports.json"));
  ASSERT_EQ(reports.size(), 12u);
  std::size_t flagged = 0;
  for (const auto& r : reports) flagged += r["verdict"] == true ? 1 : 0;
  EXPECT_GE(flagged, 1u);
  EXPECT_TRUE(det.out.empty());

  const auto manifest = io::Json::parse(io::read_file(dir / "det/manifest.json"));
  EXPECT_EQ(manifest["command"], "detect");
  EXPECT_EQ(manifest["inputs"].size(), 12u);
  EXPECT_TRUE(manifest.contains("started_at"));
}

TEST(Cli, ValidateGoodAndBadFiles) {
  TempDir dir("cli-validate");
  io::write_file_atomic(dir / "good.csv", std::string(kCsvHeader) + "\n2004-01-08,09:30:01,1,B1,S1,500,7.25\n");
  const auto ok = run({"validate", (dir / "good.csv").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("1 records"), std::string::npos);

  io::write_file_atomic(dir / "bad.csv", std::string(kCsvHeader) + "\n2004-01-08,09:30:01,1,B1,S1,500,7.25\nx\n");
  const auto bad = run({"validate", (dir / "bad.csv").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos) << bad.err;
}

TEST(Cli, FitDegenerateSample) {
  TempDir dir("cli-fit");
  io::write_file_atomic(dir / "s.txt", "7 7\n");
  const auto r = run({"fit", "--samples", (dir / "s.txt").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("degenerate"), std::string::npos) << r.err;
}

TEST(Cli, FitSampleFile) {
  TempDir dir("cli-fit-ok");
  powerlaw::DiscretePowerLawSampler s(2.5, 3);
  Rng rng(1);
  std::string text = "# draws\n";
  for (int i = 0; i < 3000; ++i) text += std::to_string(s(rng)) + (i % 10 == 9 ? "\n" : " ");
  io::write_file_atomic(dir / "draws.txt", text);
  const auto r = run({"fit", "--samples", (dir / "draws.txt").string(), "--bootstrap", "20", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::Json::parse(io::read_file(dir / "o/fits/draws.json"));
  EXPECT_NEAR(j["fits"]["sample"]["alpha"].get<double>(), 2.5, 0.2);
  EXPECT_TRUE(j["fits"]["sample"]["p_value"].is_number());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"detect", "--no-such-flag", "x"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fit"}).code, 2);
  EXPECT_EQ(run({"simulate", "--jobs", "0"}).code, 2);
  const auto missing = run({"validate", "/nonexistent/path.csv"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("error: "), std::string::npos);
  EXPECT_EQ(run({"--version"}).out, "0.1.0\n");
}

TEST(Cli, DumpConfigAndPrecedence) {
  TempDir dir("cli-config");
  io::write_file_atomic(dir / "run.toml", "seed = 99\nelevation-factor = 2.5\njobs = 3\n");
  const auto r = run({"--config", (dir / "run.toml").string(), "--seed", "5", "--dump-config", "simulate"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("seed=5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("elevation-factor=2.5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("jobs=3"), std::string::npos) << r.out;

  io::write_file_atomic(dir / "typo.toml", "elevation_factr = 2.5\n");
  const auto typo = run({"--config", (dir / "typo.toml").string(), "--dump-config", "simulate"});
  EXPECT_EQ(typo.code, 2);
  EXPECT_NE(typo.err.find("elevation_factr"), std::string::npos) << typo.err;
}

TEST(Cli, RerunsAreByteIdentical) {
  TempDir dir("cli-determinism");
  std::vector<std::string> sim = {"simulate", "--honest", "4", "--manipulated", "1", "--out", dir.path()};
  sim.insert(sim.end(), std::begin(kSmall), std::end(kSmall));
  ASSERT_EQ(run(sim).code, 0);
  const auto corpus = (dir / "corpus").string();
  auto detect = [&](const std::string& out, const std::string& jobs) {
    return run({"detect", corpus, "--with-pvalues", "--bootstrap", "20", "--jobs", jobs, "--out", out, "-q"});
  };
  const auto a = detect((dir / "a").string(), "1");
  const auto b = detect((dir / "b").string(), "3");
  ASSERT_NE(a.code, 2) << a.err;
  ASSERT_EQ(a.code, b.code);
  auto sa = snapshot(dir / "a"), sb = snapshot(dir / "b");
  sa.erase("manifest.json");
  sb.erase("manifest.json");
  EXPECT_EQ(sa, sb);
  EXPECT_TRUE(sa.count("features.csv") && sa.count("reports.json"));
}

TEST(Cli, BuildAndFeaturesOutputs) {
  TempDir dir("cli-outputs");
  std::vector<std::string> sim = {"simulate", "--honest", "2", "--manipulated", "0", "--out", dir.path()};
  sim.insert(sim.end(), std::begin(kSmall), std::end(kSmall));
  ASSERT_EQ(run(sim).code, 0);
  const auto corpus = (dir / "corpus").string();

  const auto b = run({"build", corpus, "--out", (dir / "b").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(b.out.find("average degree"), std::string::npos);
  const auto edges = io::read_file(dir / "b/networks/SIM0000.edges.csv");
  EXPECT_EQ(edges.substr(0, 28), "seller_idx,buyer_idx,weight\n");

  const auto f = run({"features", corpus, "--bootstrap", "0", "--out", (dir / "f").string()});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_TRUE(fs::exists(dir / "f/features.csv"));
  EXPECT_TRUE(fs::exists(dir / "f/fits/SIM0001.json"));
  EXPECT_TRUE(fs::exists(dir / "f/plots/SIM0001.out_degree.ccdf.csv"));
  EXPECT_TRUE(fs::exists(dir / "f/plots/SIM0001.daily.csv"));
  const auto table = io::read_file(dir / "f/features.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
}
