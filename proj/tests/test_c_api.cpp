#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mbfuse/mbfuse.h"

namespace fs = std::filesystem;

namespace {

class CApi : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mbfuse_capi_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const char* name) const { return (dir_ / name).string(); }

  std::string write(const char* name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CApi, GeometryHelpers) {
  const mbf_box a{0, 0, 2, 2}, b{1, 0, 3, 2};
  EXPECT_NEAR(mbf_iou(&a, &b), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(mbf_area(&a), 4.0);
  double x = 0, y = 0;
  mbf_center(&b, &x, &y);
  EXPECT_EQ(x, 2.0);
  EXPECT_EQ(y, 1.0);
  EXPECT_STREQ(mbf_status_name(MBF_ERR_CONFIG), "config");
  EXPECT_STRNE(mbf_version(), "");
}

TEST_F(CApi, NullArgumentsAreReported) {
  EXPECT_EQ(mbf_detections_create(nullptr), MBF_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(mbf_last_error()), "");
  mbf_detections_free(nullptr);
}

TEST_F(CApi, FuseInMemory) {
  mbf_detections* dets = nullptr;
  ASSERT_EQ(mbf_detections_create(&dets), MBF_OK);
  const mbf_detection items[] = {
      {{0, 0, 2, 2}, 0.75, 0, 0}, {{1, 1, 3, 3}, 0.25, 1, 0}, {{5, 5, 6, 6}, 0.5, 0, 1}};
  for (const auto& d : items) ASSERT_EQ(mbf_detections_push(dets, &d), MBF_OK);
  EXPECT_EQ(mbf_detections_size(dets), 3u);
  EXPECT_EQ(mbf_detections_model_count(dets), 2u);

  mbf_config* cfg = nullptr;
  ASSERT_EQ(mbf_config_create(2, &cfg), MBF_OK);
  mbf_strategy s{};
  ASSERT_EQ(mbf_parse_strategy("nmsw", &s), MBF_OK);
  ASSERT_EQ(mbf_config_set_strategy(cfg, s), MBF_OK);
  ASSERT_EQ(mbf_config_set_iou_thresh(cfg, 0.1), MBF_OK);
  EXPECT_EQ(mbf_config_set_iou_thresh(cfg, 0.0), MBF_ERR_CONFIG);
  EXPECT_EQ(mbf_parse_strategy("bogus", &s), MBF_ERR_CONFIG);

  mbf_fused* fused = nullptr;
  ASSERT_EQ(mbf_fuse(dets, cfg, nullptr, 0.0, 2, &fused), MBF_OK);
  ASSERT_EQ(mbf_fused_size(fused), 2u);
  mbf_fused_detection f{};
  ASSERT_EQ(mbf_fused_get(fused, 0, &f), MBF_OK);
  EXPECT_EQ(f.box.x_min, 0.25);
  EXPECT_EQ(f.box.y_max, 2.25);
  EXPECT_EQ(f.score, 0.75);
  EXPECT_EQ(f.source_count, 2);
  int32_t ids[4];
  size_t n = 0;
  ASSERT_EQ(mbf_fused_get_sources(fused, 0, ids, 4, &n), MBF_OK);
  EXPECT_EQ(n, 2u);
  EXPECT_EQ(ids[1], 1);
  EXPECT_EQ(mbf_fused_get(fused, 9, &f), MBF_ERR_INVALID_ARGUMENT);

  const std::string out = path("fused.csv");
  ASSERT_EQ(mbf_fused_write_csv(fused, out.c_str()), MBF_OK);
  mbf_fused* back = nullptr;
  ASSERT_EQ(mbf_fused_read_csv(out.c_str(), &back), MBF_OK);
  EXPECT_EQ(mbf_fused_size(back), 2u);

  mbf_fused_free(back);
  mbf_fused_free(fused);
  mbf_config_free(cfg);
  mbf_detections_free(dets);
}

TEST_F(CApi, WeightCountMismatch) {
  mbf_detections* dets = nullptr;
  ASSERT_EQ(mbf_detections_create(&dets), MBF_OK);
  const mbf_detection d{{0, 0, 1, 1}, 0.5, 1, 0};
  mbf_detections_push(dets, &d);
  mbf_config* cfg = nullptr;
  ASSERT_EQ(mbf_config_create(1, &cfg), MBF_OK);
  mbf_fused* fused = nullptr;
  EXPECT_EQ(mbf_fuse(dets, cfg, nullptr, 0.0, 1, &fused), MBF_ERR_CONFIG);
  EXPECT_EQ(fused, nullptr);
  mbf_config_free(cfg);
  mbf_detections_free(dets);
}

TEST_F(CApi, ReadErrorsNameFileAndLine) {
  const std::string p = write("bad.csv", "frame_id,model_id,x_min,y_min,x_max,y_max,score\n0,0,1,0,0,1,0.5\n");
  mbf_detections* dets = nullptr;
  EXPECT_EQ(mbf_detections_read_csv(p.c_str(), &dets), MBF_ERR_DATA);
  EXPECT_NE(std::string(mbf_last_error()).find("bad.csv:2"), std::string::npos);
  EXPECT_EQ(mbf_detections_read_csv(path("missing.csv").c_str(), &dets), MBF_ERR_IO);
}

TEST_F(CApi, EvaluateAndSweep) {
  const std::string gt_path = write("gt.csv", "frame_id,x,y\n0,0,0\n0,5,5\n");
  const std::string pred_path = write("p.csv", "frame_id,x,y,score\n0,0.1,0,0.9\n0,10,10,0.2\n");
  mbf_ground_truth* gt = nullptr;
  mbf_localizations* preds = nullptr;
  ASSERT_EQ(mbf_ground_truth_read_csv(gt_path.c_str(), &gt), MBF_OK);
  ASSERT_EQ(mbf_localizations_read_csv(pred_path.c_str(), &preds), MBF_OK);
  EXPECT_EQ(mbf_ground_truth_point_count(gt), 2u);

  mbf_eval_report r{};
  ASSERT_EQ(mbf_evaluate(preds, gt, 1.0, &r), MBF_OK);
  EXPECT_EQ(r.true_positives, 1u);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_NEAR(r.rmse, 0.1, 1e-15);
  EXPECT_EQ(mbf_evaluate(preds, gt, 0.0, &r), MBF_ERR_INVALID_ARGUMENT);

  double t = 0, f1 = 0;
  ASSERT_EQ(mbf_sweep(preds, gt, 1.0, &t, &f1), MBF_OK);
  EXPECT_EQ(t, 0.9);
  EXPECT_NEAR(f1, 2.0 / 3.0, 1e-15);

  mbf_localizations_free(preds);
  mbf_ground_truth_free(gt);
}

TEST_F(CApi, GridAndScenario) {
  const std::string sc = write("s.scn",
                               "seed = 4\nframes = 5\nfield = 0,0,4,4\nmb_per_frame = 3\n[detector]\n"
                               "jitter_sigma = 0\nmiss_rate = 0\nfp_rate = 0\nbox_half_extent = 0.1\n"
                               "extent_noise_sigma = 0\ntp_confidence_min = 0.5\nfp_confidence_max = 0.5\n");
  mbf_scenario* s = nullptr;
  ASSERT_EQ(mbf_scenario_load(sc.c_str(), &s), MBF_OK);
  EXPECT_EQ(mbf_scenario_seed(s), 4u);
  EXPECT_EQ(mbf_scenario_detector_count(s), 1u);
  mbf_ground_truth* gt = nullptr;
  mbf_detections* dets[1] = {nullptr};
  ASSERT_EQ(mbf_simulate(s, &gt, dets), MBF_OK);
  EXPECT_EQ(mbf_detections_size(dets[0]), 15u);

  const std::string dp = path("d.csv");
  ASSERT_EQ(mbf_detections_write_csv(dets[0], dp.c_str()), MBF_OK);
  mbf_localizations* locs = nullptr;
  ASSERT_EQ(mbf_localizations_read_csv(dp.c_str(), &locs), MBF_OK);
  mbf_grid* g = nullptr;
  ASSERT_EQ(mbf_grid_create(0, 0, 0.5, 4, 4, &g), MBF_OK);
  uint64_t oob = 0;
  ASSERT_EQ(mbf_grid_accumulate(g, locs, 3, &oob), MBF_OK);
  EXPECT_EQ(mbf_grid_total(g) + oob, 15u);
  ASSERT_EQ(mbf_grid_write_pgm(g, MBF_RENDER_LOG, path("m.pgm").c_str()), MBF_OK);
  EXPECT_EQ(fs::file_size(path("m.pgm")), std::string("P5\n4 4\n255\n").size() + 16);
  EXPECT_EQ(mbf_grid_create(0, 0, -1, 4, 4, &g), MBF_ERR_INVALID_ARGUMENT);

  uint64_t digest = 0;
  ASSERT_EQ(mbf_file_digest(dp.c_str(), &digest), MBF_OK);
  EXPECT_NE(digest, 0u);

  mbf_grid_free(g);
  mbf_localizations_free(locs);
  mbf_detections_free(dets[0]);
  mbf_ground_truth_free(gt);
  mbf_scenario_free(s);
}
