#include <gtest/gtest.h>

#include <sstream>

#include "csv_io.hpp"
#include "error.hpp"
#include "random.hpp"
#include "text_format.hpp"

using namespace mbfuse;

TEST(TextFormat, RealsRoundTripAtNineDigits) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(-0.0), "0");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_real(1e-12), "1e-12");
  Xoshiro256 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = quantize_real(rng.uniform(-1000, 1000));
    double back = 0;
    ASSERT_TRUE(parse_real(format_real(v), back));
    EXPECT_EQ(back, v);
    EXPECT_EQ(quantize_real(v), v);
  }
}

TEST(TextFormat, StrictParsers) {
  double d = 0;
  std::int64_t n = 0;
  EXPECT_TRUE(parse_real("+1.5", d));
  EXPECT_EQ(d, 1.5);
  EXPECT_FALSE(parse_real("1.5x", d));
  EXPECT_FALSE(parse_real("", d));
  EXPECT_FALSE(parse_real("nan", d));
  EXPECT_TRUE(parse_int("-12", n));
  EXPECT_FALSE(parse_int("1.0", n));
}

TEST(TextFormat, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Csv, DetectionsRoundTrip) {
  const std::vector<Detection> dets{{{0, 0.5, 1.25, 2}, 0.75, 3, 10}, {{-1, -1, -0.5, 0}, 1, 0, 0}};
  std::ostringstream os;
  write_detections(os, dets);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kDetectionHeader);
  std::istringstream is(os.str());
  EXPECT_EQ(read_detections(is, "t"), dets);
}

TEST(Csv, FusedRoundTripAfterQuantize) {
  Xoshiro256 rng(2);
  std::vector<FusedDetection> fused;
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(0, 20), y = rng.uniform(0, 20);
    fused.push_back({i / 7, {x, y, x + rng.uniform(), y + rng.uniform()}, rng.uniform(), 1 + i % 4, {0, 2, 4}});
  }
  quantize(fused);
  std::ostringstream os;
  write_fused(os, fused);
  std::istringstream is(os.str());
  EXPECT_EQ(read_fused(is, "t"), fused);
}

TEST(Csv, GroundTruthAndLocalizations) {
  std::istringstream gt("frame_id,x,y\n2,1,1\n0,0.5,0.5\n2,3,3\n");
  const auto frames = read_ground_truth(gt, "gt");
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].frame_id, 0);
  EXPECT_EQ(frames[1].points, (std::vector<Point>{{1, 1}, {3, 3}}));

  const std::vector<Localization> locs{{1, 2, 0.5, 3}};
  std::ostringstream os;
  write_localizations(os, locs);
  EXPECT_EQ(os.str(), "frame_id,x,y,score\n3,1,2,0.5\n");
}

TEST(Csv, PredictionsFromAnySchema) {
  std::istringstream d("frame_id,model_id,x_min,y_min,x_max,y_max,score\n0,0,0,0,2,4,0.5\n");
  EXPECT_EQ(read_predictions(d, "d"), (std::vector<Localization>{{1, 2, 0.5, 0}}));
  std::istringstream f("frame_id,x_min,y_min,x_max,y_max,score,source_count,source_models\n1,0,0,2,2,0.25,2,0;1\n");
  EXPECT_EQ(read_predictions(f, "f"), (std::vector<Localization>{{1, 1, 0.25, 1}}));
  std::istringstream bad("a,b\n");
  EXPECT_THROW(read_predictions(bad, "b"), Error);
}

TEST(Csv, ErrorsCarryFileAndLine) {
  auto expect = [](const std::string& text, ErrorCategory cat, const std::string& where) {
    std::istringstream is(text);
    try {
      read_detections(is, "dets.csv");
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), cat) << text;
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  };
  const std::string h = std::string(kDetectionHeader) + "\n";
  expect(h + "0,0,0,0,1,1,0.5\n0,0,0,0,1\n", ErrorCategory::Parse, "dets.csv:3");
  expect(h + "0,0,0,0,1,1,abc\n", ErrorCategory::Parse, "dets.csv:2");
  expect(h + "0,0,2,0,1,1,0.5\n", ErrorCategory::Data, "dets.csv:2");
  expect(h + "0,0,0,0,1,1,1.5\n", ErrorCategory::Data, "dets.csv:2");
  expect("frame_id,x,y\n", ErrorCategory::Parse, "dets.csv:1");
}
