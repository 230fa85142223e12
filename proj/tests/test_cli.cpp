#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mbfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mbfuse::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mbfuse_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(p("s.scn")) << "seed = 8\nframes = 20\nfield = 0,0,12.8,9.6\nmb_per_frame = 10\n"
                                 "min_separation = 0.6\n";
    for (double jitter : {0.03, 0.04, 0.05}) {
      std::ofstream(p("s.scn"), std::ios::app)
          << "[detector]\njitter_sigma = " << jitter << "\nmiss_rate = 0.2\nfp_rate = 2\n"
          << "box_half_extent = 0.25\nextent_noise_sigma = 0.03\ntp_confidence_min = 0.4\n"
          << "fp_confidence_max = 0.7\n";
    }
    ASSERT_EQ(run({"simulate", "--scenario", p("s.scn"), "--out-dir", p("sim")}).code, 0);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> inputs() const {
    std::vector<std::string> a;
    for (int k = 0; k < 3; ++k) {
      a.push_back("--input");
      a.push_back(p("sim/detector_" + std::to_string(k) + ".csv"));
    }
    return a;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateWritesFiles) {
  EXPECT_TRUE(fs::exists(p("sim/gt.csv")));
  EXPECT_TRUE(fs::exists(p("sim/detector_2.csv")));
  const std::string manifest = slurp(p("sim/simulate.manifest"));
  EXPECT_NE(manifest.find("seed=8\n"), std::string::npos);
  run({"simulate", "--scenario", p("s.scn"), "--out-dir", p("sim2")});
  EXPECT_EQ(slurp(p("sim/detector_1.csv")), slurp(p("sim2/detector_1.csv")));
  run({"simulate", "--scenario", p("s.scn"), "--out-dir", p("sim3"), "--seed", "9"});
  EXPECT_NE(slurp(p("sim/detector_1.csv")), slurp(p("sim3/detector_1.csv")));
}

TEST_F(Cli, FuseEvalRenderSweep) {
  auto args = inputs();
  for (const char* a : {"--strategy", "wbf", "--weights", "0.8,0.7,0.6", "--output"}) args.push_back(a);
  args.push_back(p("wbf.csv"));
  args.insert(args.begin(), "fuse");
  const auto fuse = run(args);
  ASSERT_EQ(fuse.code, 0) << fuse.err;
  EXPECT_TRUE(fs::exists(p("wbf.csv.manifest")));

  const auto eval = run({"eval", "--pred", p("wbf.csv"), "--pred", p("sim/detector_0.csv"), "--gt",
                         p("sim/gt.csv"), "--tol", "0.1", "--csv", p("m.csv")});
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_NE(eval.out.find("precision_pct"), std::string::npos);
  EXPECT_NE(eval.out.find("detector_0"), std::string::npos);
  EXPECT_EQ(slurp(p("m.csv")).substr(0, 43), "strategy,precision_pct,recall_pct,rmse,tp,f");

  const auto sweep = run({"sweep", "--pred", p("wbf.csv"), "--gt", p("sim/gt.csv"), "--tol", "0.1"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  EXPECT_EQ(sweep.out.rfind("threshold=", 0), 0u);

  const auto render = run({"render", "--input", p("wbf.csv"), "--origin", "0,0", "--dims", "128,96",
                           "--pixel-size", "0.8", "--pgm", p("m.pgm"), "--counts", p("c.csv"), "--mode", "log"});
  ASSERT_EQ(render.code, 0) << render.err;
  EXPECT_EQ(slurp(p("m.pgm")).substr(0, 14), "P5\n128 96\n255\n");
  EXPECT_NE(render.out.find("out_of_bounds="), std::string::npos);
}

TEST_F(Cli, ManifestReplayReproducesBytes) {
  auto args = inputs();
  for (const char* a : {"--strategy", "soft-nms", "--decay", "linear", "--final-thresh", "auto-f1", "--tol", "0.1"}) {
    args.push_back(a);
  }
  args.insert(args.end(), {"--gt", p("sim/gt.csv"), "--output", p("f.csv"), "--localizations", p("l.csv")});
  args.insert(args.begin(), "fuse");
  ASSERT_EQ(run(args).code, 0);
  const std::string first = slurp(p("f.csv"));
  const std::string manifest = slurp(p("f.csv.manifest"));
  EXPECT_NE(manifest.find("final_thresh=auto-f1\n"), std::string::npos);
  EXPECT_NE(manifest.find("chosen_final_thresh="), std::string::npos);

  fs::remove(p("f.csv"));
  const auto replay = run({"fuse", "--from-manifest", p("f.csv.manifest"), "--threads", "4"});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(slurp(p("f.csv")), first);

  std::ofstream(p("sim/detector_0.csv"), std::ios::app) << "19,0,1,1,1.5,1.5,0.5\n";
  const auto changed = run({"fuse", "--from-manifest", p("f.csv.manifest")});
  EXPECT_EQ(changed.code, mbfuse::cli::kExitData);
}

TEST_F(Cli, ExitCodesAndCategories) {
  auto args = inputs();
  args.insert(args.begin(), "fuse");
  args.insert(args.end(), {"--strategy", "wbf", "--weights", "1,1", "--output", p("x.csv")});
  const auto wrong = run(args);
  EXPECT_EQ(wrong.code, mbfuse::cli::kExitConfig);
  EXPECT_EQ(wrong.err.rfind("error[config]: ", 0), 0u) << wrong.err;

  EXPECT_EQ(run({"fuse", "--strategy", "wbf"}).code, mbfuse::cli::kExitInvalidArgument);
  EXPECT_EQ(run({"eval", "--gt", p("sim/gt.csv")}).code, mbfuse::cli::kExitUsage);
  EXPECT_EQ(run({"nope"}).code, mbfuse::cli::kExitUsage);
  EXPECT_EQ(run({"sweep", "--pred", p("missing.csv"), "--gt", p("sim/gt.csv"), "--tol", "1"}).code,
            mbfuse::cli::kExitIo);

  std::ofstream(p("bad.csv")) << "frame_id,model_id,x_min,y_min,x_max,y_max,score\n0,0,0,0,1\n";
  const auto bad = run({"fuse", "--input", p("bad.csv"), "--strategy", "nms", "--output", p("y.csv")});
  EXPECT_EQ(bad.code, mbfuse::cli::kExitParse);
  EXPECT_NE(bad.err.find("bad.csv:2"), std::string::npos);
  EXPECT_EQ(run({"fuse", "--input", p("bad.csv"), "--strategy", "best", "--output", p("y.csv")}).code,
            mbfuse::cli::kExitParse);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST_F(Cli, SingleModelNmsPassesEverythingThrough) {
  std::ofstream(p("one.csv")) << "frame_id,model_id,x_min,y_min,x_max,y_max,score\n"
                                 "0,0,0,0,1,1,0.25\n0,0,4,4,5,5,0.75\n1,0,2,2,3,3,0.5\n";
  ASSERT_EQ(run({"fuse", "--input", p("one.csv"), "--strategy", "nms", "--output", p("o.csv")}).code, 0);
  EXPECT_EQ(slurp(p("o.csv")),
            "frame_id,x_min,y_min,x_max,y_max,score,source_count,source_models\n"
            "0,4,4,5,5,0.75,1,0\n0,0,0,1,1,0.25,1,0\n1,2,2,3,3,0.5,1,0\n");
}
