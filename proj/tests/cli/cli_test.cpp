#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "corpus.hpp"

namespace {

namespace fs = std::filesystem;
using ethcluster::VulnerabilityKind;
using ethcluster::testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const TempDir& tmp, const std::string& args) {
  const std::string cmd = "cd '" + tmp.path().string() + "' && '" ETHCLUSTER_CLI_PATH "' " + args +
                          " > out.txt 2> err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, StagedCommandsReproduceRun) {
  TempDir tmp("cli");
  ethcluster::testing::write_corpus(tmp.path() / "corpus", VulnerabilityKind::reentrancy, 15, 35, 3);
  ASSERT_EQ(cli(tmp, "build-dataset --vuln corpus/vulnerable --clean corpus/clean --fraction 0.3 --out ds.json"), 0);
  ASSERT_EQ(cli(tmp, "preprocess --in ds.json --out tok"), 0);
  ASSERT_EQ(cli(tmp, "detect --kind reentrancy --in tok --out flags.json"), 0);
  ASSERT_EQ(cli(tmp, "train-embedding --in tok --dim 10 --out model.vec"), 0);
  ASSERT_EQ(cli(tmp, "vectorize --in tok --embedding model.vec --flags flags.json --out vec/vectors.json"), 0);
  ASSERT_EQ(cli(tmp, "cluster --vectors vec/vectors.json --labels tok --kind reentrancy --out model.json"), 0);
  ASSERT_EQ(cli(tmp, "evaluate --model model.json --dataset ds.json --out report.json"), 0);
  ASSERT_EQ(cli(tmp, "project --vectors vec/vectors.json --model model.json --out points.csv"), 0);
  EXPECT_EQ(slurp(tmp.path() / "points.csv").substr(0, 18), "x,y,cluster,label\n");

  ASSERT_EQ(cli(tmp, "run --kind reentrancy --dataset ds.json --workdir w"), 0);
  EXPECT_EQ(slurp(tmp.path() / "model.vec"), slurp(tmp.path() / "w/reentrancy/embed.vec"));
  const auto staged = nlohmann::json::parse(slurp(tmp.path() / "model.json"));
  const auto full = nlohmann::json::parse(slurp(tmp.path() / "w/reentrancy/model.json"));
  EXPECT_EQ(staged["clusters"], full["clusters"]);
  EXPECT_EQ(staged["keywords"], full["keywords"]);

  ASSERT_EQ(cli(tmp, "scan --kind reentrancy --workdir w corpus/vulnerable/v0000.sol"), 0);
  const auto scan = nlohmann::json::parse(slurp(tmp.path() / "out.txt"));
  EXPECT_EQ(scan["kind"], "reentrancy");
  EXPECT_TRUE(scan.contains("regex"));
}

TEST(Cli, ErrorsAreJsonOnStderr) {
  TempDir tmp("cli-err");
  EXPECT_NE(cli(tmp, "run --kind reentrancy --vuln missing --clean missing"), 0);
  const auto err = nlohmann::json::parse(slurp(tmp.path() / "err.txt"));
  EXPECT_EQ(err["error"], "PathError");
  EXPECT_EQ(err["stage"], "load");
  EXPECT_NE(cli(tmp, "scan --kind tx_origin nothing.sol"), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(tmp.path() / "err.txt"))["error"], "ModelNotFound");
  EXPECT_NE(cli(tmp, "detect --kind access_control --in . --out f.json"), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(tmp.path() / "err.txt"))["error"], "InvalidKind");
}

}  // namespace
