#include <gtest/gtest.h>

#include <filesystem>

#include "hieraf/detect.hpp"
#include "hieraf/encoder.hpp"
#include "hieraf/error.hpp"
#include "hieraf/iqa.hpp"
#include "hieraf/scene.hpp"

namespace hieraf {
namespace {

TEST(Encoder, SeedDeterminism) {
  EXPECT_TRUE(init_encoder(0) == init_encoder(0));
  EXPECT_FALSE(init_encoder(0) == init_encoder(1));
}

TEST(Encoder, BanksHaveOrthonormalRows) {
  const auto p = init_encoder(3);
  for (const auto& bank : p.banks) {
    const Eigen::MatrixXd gram = bank * bank.transpose();
    EXPECT_TRUE(gram.isApprox(Eigen::MatrixXd::Identity(bank.rows(), bank.rows()), 1e-9));
  }
  EXPECT_EQ(p.projection.rows(), kFeatureDim);
  for (Eigen::Index r = 0; r < p.projection.rows(); ++r) {
    ASSERT_NEAR(p.projection.row(r).norm(), 1.0, 1e-9);
  }
}

TEST(Encoder, OutputShapeAndDeterminism) {
  const RandomConvEncoder enc(1);
  const Scene s = procedural_scene(1, 160.0, 100.0);
  const auto img = render(s, LensState(40.0), CameraState(100), {});
  const auto a = enc.encode(img);
  EXPECT_EQ(a.size(), kFeatureDim);
  EXPECT_TRUE(a.allFinite());
  EXPECT_EQ(a, enc.encode(img));
  EXPECT_EQ(enc.encode(SensorImage(20, 10, 50)).size(), kFeatureDim);
}

TEST(Encoder, BlurMovesTheEmbedding) {
  const RandomConvEncoder enc(1);
  const Scene s = procedural_scene(1, 160.0, 100.0);
  const auto sharp = render(s, LensState(40.0), CameraState(100), {});
  const auto blurred = render(s, LensState(56.0), CameraState(100), {});
  EXPECT_GT((enc.encode(sharp) - enc.encode(blurred)).norm(), 1e-3);
}

class DetectorTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scenes_ = new std::vector<Scene>(bundled_scenes());
    th_ = calibrate_detector(*scenes_);
  }
  static void TearDownTestSuite() { delete scenes_; }

  static std::vector<Scene>* scenes_;
  static DetectorThresholds th_;
};

std::vector<Scene>* DetectorTest::scenes_ = nullptr;
DetectorThresholds DetectorTest::th_;

TEST_F(DetectorTest, CalibrationIsDeterministic) {
  EXPECT_EQ(calibrate_detector(*scenes_), th_);
  EXPECT_DOUBLE_EQ(th_.mean_lo, 25.0);
  EXPECT_DOUBLE_EQ(th_.mean_hi, 230.0);
  EXPECT_THROW(calibrate_detector(std::span<const Scene>(scenes_->data(), 4)), CalibrationError);
}

TEST_F(DetectorTest, InFocusWellExposedIsDetected) {
  for (const auto& s : *scenes_) {
    const auto frame = render(s, LensState(in_focus_control(s.distance_cm())),
                              CameraState(well_exposed_index(s)), {});
    const auto box = detect(frame, s.object_box(), th_);
    ASSERT_TRUE(box.has_value());
    EXPECT_EQ(*box, s.object_box());
  }
}

TEST_F(DetectorTest, HeavyDefocusIsNotDetected) {
  for (const auto& base : *scenes_) {
    const Scene s = base.with_conditions(140.0, base.illuminance_lx());
    const CameraState cam(well_exposed_index(s));
    const auto anchor = render(s, LensState(30.0), cam, {});
    const auto defocused = render(s, LensState(70.0), cam, {});
    ASSERT_DOUBLE_EQ(blur_sigma(LensState(70.0), in_focus_control(140.0)), 10.0);
    EXPECT_LT(tenengrad(defocused, s.object_box()), 0.5 * tenengrad(anchor, s.object_box()));
    EXPECT_FALSE(detect(defocused, s.object_box(), th_).has_value());
  }
}

TEST_F(DetectorTest, NearBlackIsNotDetected) {
  const Scene s = (*scenes_)[0].with_conditions(170.0, 13.0);
  const auto frame = render(s, LensState(45.0), CameraState(0), {});
  EXPECT_LT(region_stats(frame, s.object_box()).mean, 25.0);
  EXPECT_FALSE(detect(frame, s.object_box(), th_).has_value());
}

TEST(DetectorThresholdsTest, Validation) {
  DetectorThresholds th;
  EXPECT_NO_THROW(th.validate());
  th.mean_lo = 240.0;
  EXPECT_THROW(th.validate(), RangeError);
  th = {};
  th.sharp_min = 0.0;
  EXPECT_THROW(th.validate(), RangeError);
}

TEST(DetectorProtocol, ParsesResponses) {
  EXPECT_FALSE(parse_detector_response("none").has_value());
  const auto r = parse_detector_response("1 2 30 40");
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r, (Rect{1, 2, 30, 40}));
  EXPECT_THROW(parse_detector_response("1 2 3"), IoError);
  EXPECT_THROW(parse_detector_response("banana"), IoError);
}

TEST(DetectorProtocol, ExternalProcessRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "hieraf_ext_det_test";
  ExternalProcessDetector det(
      {"sh", "-c", "echo 'hieraf-detector 1'; n=0; while read p; do "
                   "if [ -s \"$p\" ]; then n=$((n+1)); fi; "
                   "if [ $n -eq 1 ]; then echo none; else echo '3 4 5 6'; fi; done"},
      dir);
  const SensorImage img(16, 16, 9);
  EXPECT_FALSE(det.detect(img, Rect{0, 0, 4, 4}).has_value());
  const auto r = det.detect(img, Rect{0, 0, 4, 4});
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r, (Rect{3, 4, 5, 6}));
  std::filesystem::remove_all(dir);
}

TEST(DetectorProtocol, WrongGreetingIsRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "hieraf_ext_det_bad";
  EXPECT_THROW(ExternalProcessDetector({"sh", "-c", "echo hello"}, dir), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hieraf
