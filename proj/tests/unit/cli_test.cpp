#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "spal/oracle.hpp"
#include "spal/synthetic.hpp"
#include "test_support.hpp"

namespace spal {
namespace {

using testing::TempDir;

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST(CliTest, CorrelateRanksColumns) {
  TempDir dir;
  std::ofstream(dir / "sweep.csv") << "setting,up,down,flat,mIoU\n"
                                      "a,1,4,7,0.1\n"
                                      "b,2,3,7,0.2\n"
                                      "c,3,2,7,0.3\n"
                                      "d,4,1,7,0.4\n";
  const Result r = run({"correlate", "--csv", (dir / "sweep.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "metric,pearson");
  EXPECT_EQ(lines[1], "up,1");
  EXPECT_EQ(lines[2], "down,-1");
}

TEST(CliTest, OracleThenEvaluateIdentity) {
  TempDir dir;
  SyntheticConfig cfg;
  cfg.width = cfg.height = 24;
  write_synthetic_dataset(dir / "data", 2, 0, 8, cfg);
  Result r = run({"oracle", "--manifest", (dir / "data/manifest.json").string(), "-o", (dir / "oracle").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "oracle/0.seg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "oracle/ignored.json"));

  r = run({"evaluate", "--seg", (dir / "oracle").string(), "--oracle", (dir / "oracle").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "image,asa_sg,ap_sg,ar_sg,af_sg,asa_gs,ap_gs,ar_gs,af_gs");
  EXPECT_EQ(lines[3], "pooled,1,1,1,1,1,1,1,1");
  EXPECT_EQ(lines[4], "mean,1,1,1,1,1,1,1,1");
}

TEST(CliTest, SegmentMergeRoundTrip) {
  TempDir dir;
  SyntheticConfig cfg;
  cfg.width = cfg.height = 24;
  write_synthetic_dataset(dir / "data", 1, 0, 8, cfg);
  Result r = run({"segment", "--manifest", (dir / "data/manifest.json").string(), "--size", "16", "-o",
                  (dir / "seg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Segmentation seg = load_segmentation(dir / "seg/0.seg", {24, 24});
  save_prob_map(testing::region_prob_map(seg, std::vector<std::vector<double>>(seg.num_regions(), {0.5, 0.5})),
                dir / "p.ppf");
  r = run({"merge", "--seg", (dir / "seg/0.seg").string(), "--probs", (dir / "p.ppf").string(), "--epsilon", "0.1",
           "-o", (dir / "merged.seg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_segmentation(dir / "merged.seg", {24, 24}).num_regions(), 1u);
}

TEST(CliTest, ErrorsExitNonZero) {
  EXPECT_NE(run({"evaluate"}).code, 0);
  EXPECT_NE(run({"no-such-command"}).code, 0);
  TempDir dir;
  std::ofstream(dir / "state.json") << "{ not json";
  const Result r = run({"loop", "status", "--state", (dir / "state.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

}  // namespace
}  // namespace spal
