#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fixtures.h"
#include "json.hpp"
#include "relcomp/process.h"
#include "relcomp/quality.h"
#include "relcomp/study.h"

namespace relcomp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ProcessResult cli(const std::vector<std::string>& args) {
  return run_process(RELCOMP_CLI_PATH, args, std::chrono::minutes(5));
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, Grid) {
  auto r = cli({"grid", "--codec", "av1"});
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  EXPECT_EQ(lines(r.stdout_text), 40);
  EXPECT_EQ(r.stdout_text.substr(0, r.stdout_text.find('\n')), "codec,crf,width,height");
  r = cli({"grid", "--codec", "h264,av1"});
  EXPECT_EQ(lines(r.stdout_text), 79);
  r = cli({"grid", "--codec", "h265", "--json"});
  EXPECT_EQ(json::parse(r.stdout_text).size(), 39u);
}

TEST(Cli, RankNumbersSetups) {
  const auto dir = testing::temp_dir("cli_rank");
  std::vector<Measurement> ms;
  int i = 0;
  for (CodecFamily c : {CodecFamily::kH264, CodecFamily::kAV1}) {
    for (const auto& p : setup_grid(c)) ms.push_back({p, 0.99 - 0.001 * ((i * 37) % 78), 100.0 + i++});
  }
  std::ofstream(dir / "m.csv") << measurements_to_csv(ms);
  const auto r = cli({"rank", (dir / "m.csv").string(), "--out", (dir / "cat.csv").string()});
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  const SetupCatalog cat = catalog_from_csv(r.stdout_text);
  ASSERT_EQ(cat.size(), 78);
  EXPECT_EQ(cat.at(1).mean_ssim, 0.99);
  EXPECT_EQ(slurp(dir / "cat.csv"), r.stdout_text);
}

TEST(Cli, Thresholds) {
  const auto dir = testing::temp_dir("cli_thresholds");
  std::ofstream(dir / "hr.csv") << catalog_to_csv(
      testing::reference_catalog(RelevanceLevel::kHighlyRelevant, false));
  std::ofstream(dir / "r.csv") << catalog_to_csv(
      testing::reference_catalog(RelevanceLevel::kRelevant, false));
  std::vector<StudyResult> results;
  int p = 0;
  for (int s : {30, 35, 37, 41, 0}) results.push_back({"p" + std::to_string(p++), RelevanceLevel::kHighlyRelevant, s, {}});
  for (int s : {50, 59, 60}) results.push_back({"p" + std::to_string(p++), RelevanceLevel::kRelevant, s, {}});
  std::ofstream(dir / "results.csv") << results_to_csv(results);

  auto r = cli({"thresholds", (dir / "results.csv").string(), "--catalog",
                "HR=" + (dir / "hr.csv").string(), "--catalog", "R=" + (dir / "r.csv").string(),
                "--emit-profiles", (dir / "profiles.json").string()});
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  EXPECT_NE(r.stdout_text.find("HR,36,0.9250,4,1,h264,34,25,640,480,0.9260,653.39"), std::string::npos)
      << r.stdout_text;
  EXPECT_NE(r.stdout_text.find("HR,36,0.9250,4,1,av1,36,57,1024,768,0.9250,190.38"), std::string::npos);
  EXPECT_NE(r.stdout_text.find("R,59,0.9048,3,0,av1,57,63,800,600,0.9078,68.32"), std::string::npos);
  const json profiles = json::parse(slurp(dir / "profiles.json"));
  EXPECT_EQ(profiles["HR"]["h264"]["crf"], 25);

  r = cli({"thresholds", (dir / "results.csv").string(), "--catalog",
           "HR=" + (dir / "hr.csv").string(), "--category", "HR", "--json"});
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  const json doc = json::parse(r.stdout_text);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_NEAR(doc[0]["threshold_ssim"].get<double>(), 0.9250, 1e-12);
  // R has no catalog and no shared fallback.
  EXPECT_EQ(cli({"thresholds", (dir / "results.csv").string(), "--catalog",
                 "HR=" + (dir / "hr.csv").string()})
                .exit_code,
            5);
}

TEST(Cli, Report) {
  auto r = cli({"report", "--format", "totals-csv"});
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.stdout_text.find("h264,23.75,95.94"), std::string::npos);
  r = cli({"report"});
  EXPECT_EQ(lines(r.stdout_text), 10);
  EXPECT_EQ(cli({"report", "--format", "xml"}).exit_code, 5);
}

TEST(Cli, ExitCodes) {
  const auto dir = testing::temp_dir("cli_exit");
  EXPECT_EQ(cli({}).exit_code, 2);
  EXPECT_EQ(cli({"grid", "--bogus"}).exit_code, 2);
  EXPECT_EQ(cli({"grid", "--codec", "vp9"}).exit_code, 5);
  std::ofstream(dir / "v.mp4") << "x";
  const auto r = cli({"compress", (dir / "v.mp4").string(), (dir / "missing.csv").string()});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.stderr_text.find("missing.csv"), std::string::npos);
  std::ofstream(dir / "bad.csv") << "label,start_frame,end_frame\nStitching,0,10\n";
  std::ofstream(dir / "m.csv") << "codec,crf\nh264,23\n";
  EXPECT_EQ(cli({"rank", (dir / "m.csv").string()}).exit_code, 4);
  EXPECT_EQ(cli({"study", "serve", "--config", (dir / "none.json").string()}).exit_code, 3);
}

class CliCompress : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    available_ = testing::ffmpeg_available();
    if (!available_) return;
    dir_ = testing::temp_dir("cli_compress");
    testing::make_synthetic_video(dir_ / "src.mp4", 2.0, 320, 240, 25);
    std::ofstream(dir_ / "ann.csv") << "label,start_frame,end_frame\n"
                                       "Capsulorhexis,0,15\nIrrigationAspiration,25,40\n";
  }
  void SetUp() override {
    if (!available_) GTEST_SKIP() << "ffmpeg not available";
  }
  static inline bool available_ = false;
  static inline fs::path dir_;
};

TEST_F(CliCompress, MergePrecedingDropsNothing) {
  const auto r = cli({"compress", (dir_ / "src.mp4").string(), (dir_ / "ann.csv").string(),
                      "--codec", "h264", "--idle-policy", "merge-preceding", "--no-baseline",
                      "--out", (dir_ / "merge").string(), "--json"});
  ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
  const json doc = json::parse(r.stdout_text);
  EXPECT_EQ(doc["manifest"]["dropped_frames"], 0);
  EXPECT_EQ(doc["manifest"]["planned_frames"], 50);
  const json manifest = json::parse(slurp(dir_ / "merge" / "manifest.json"));
  EXPECT_EQ(manifest, doc["manifest"]);
  EXPECT_TRUE(fs::exists(dir_ / "merge" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "merge" / "timeline.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "merge" / ".work"));
}

TEST_F(CliCompress, DropIsIdempotent) {
  std::vector<std::string> manifests, reports;
  for (const char* out : {"drop1", "drop2"}) {
    const auto r = cli({"compress", (dir_ / "src.mp4").string(), (dir_ / "ann.csv").string(),
                        "--codec", "h265", "--no-baseline", "--out", (dir_ / out).string()});
    ASSERT_EQ(r.exit_code, 0) << r.stderr_text;
    EXPECT_EQ(lines(r.stdout_text), 3);
    manifests.push_back(slurp(dir_ / out / "manifest.json"));
    reports.push_back(slurp(dir_ / out / "report.json"));
  }
  EXPECT_EQ(manifests[0], manifests[1]);
  EXPECT_EQ(reports[0], reports[1]);
  EXPECT_EQ(json::parse(manifests[0])["dropped_frames"], 20);
}

TEST_F(CliCompress, MissingEncoderIsBackendError) {
  std::ofstream(dir_ / "backend.json") << R"({"executable": "/nonexistent/ffmpeg"})";
  const auto r = cli({"compress", (dir_ / "src.mp4").string(), (dir_ / "ann.csv").string(),
                      "--backend", (dir_ / "backend.json").string(), "--out",
                      (dir_ / "nobackend").string()});
  EXPECT_EQ(r.exit_code, 6) << r.stderr_text;
}

}  // namespace
}  // namespace relcomp
