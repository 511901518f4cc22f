#include "selfcal/metrics.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <random>

namespace selfcal {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

TEST(FocalError, HandValues) {
  EXPECT_EQ(focal_error(600, 600), 0.0);
  EXPECT_EQ(focal_error(300, 600), 0.5);
  EXPECT_DOUBLE_EQ(focal_error(750, 600), 0.2);
}

TEST(FocalError, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 5000.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), s = u(rng) / 100.0;
    EXPECT_EQ(focal_error(a, b), focal_error(b, a));
    EXPECT_NEAR(focal_error(s * a, s * b), focal_error(a, b), 1e-15);
    EXPECT_GE(focal_error(a, b), 0.0);
    EXPECT_LT(focal_error(a, b), 1.0);
  }
}

RelativePose pose(const Mat3& R, const Vec3& t) { return {R, t.normalized()}; }

TEST(PoseError, Constructed) {
  const Mat3 R = Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized())
                     .toRotationMatrix();
  const Vec3 t(0.2, -0.4, 1.0);
  const RelativePose gt = pose(R, t);
  EXPECT_EQ(pose_error(gt, gt), 0.0);

  const Mat3 Rz = Eigen::AngleAxisd(5 * kDeg, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_NEAR(pose_error(pose(Rz * R, t), gt), 5.0, 1e-10);

  const Vec3 axis = t.cross(Vec3::UnitX()).normalized();
  const Vec3 t12 = Eigen::AngleAxisd(12 * kDeg, axis) * t;
  EXPECT_NEAR(pose_error(pose(R, t12), gt), 12.0, 1e-10);
  // Both present: the larger wins.
  EXPECT_NEAR(pose_error(pose(Rz * R, t12), gt), 12.0, 1e-10);
}

TEST(PoseError, TranslationSignOnlyIgnoredWithoutCheirality) {
  const RelativePose gt = pose(Mat3::Identity(), Vec3(1, 0, 0));
  const RelativePose flipped = pose(Mat3::Identity(), Vec3(-1, 0, 0));
  EXPECT_NEAR(pose_error(flipped, gt, true), 180.0, 1e-12);
  EXPECT_NEAR(pose_error(flipped, gt, false), 0.0, 1e-12);
}

TEST(PoseError, SmallRotationsStayAccurate) {
  const Mat3 R = Eigen::AngleAxisd(1e-7, Vec3::UnitY()).toRotationMatrix();
  EXPECT_NEAR(rotation_error(R, Mat3::Identity()), 1e-7 / kDeg, 1e-15);
}

TEST(MeanAverageAccuracy, HandValues) {
  const std::vector<double> zeros(7, 0.0);
  EXPECT_EQ(mean_average_accuracy(zeros, 10.0, 10), 1.0);
  const std::vector<double> big = {10.5, 11, 40};
  EXPECT_EQ(mean_average_accuracy(big, 10.0, 10), 0.0);
  const std::vector<double> half = {0.5};
  EXPECT_EQ(mean_average_accuracy(half, 10.0, 10), 1.0);
  EXPECT_EQ(mean_average_accuracy(std::vector<double>{}, 10.0, 10), 0.0);
  // One error at 2.5 with bins at 1..4: below 3 and 4 only.
  const std::vector<double> one = {2.5};
  EXPECT_EQ(mean_average_accuracy(one, 4.0, 4), 0.5);
  // An error exactly on a threshold is not below it.
  const std::vector<double> edge = {1.0};
  EXPECT_EQ(mean_average_accuracy(edge, 2.0, 2), 0.5);
}

TEST(MeanAverageAccuracy, InvalidArguments) {
  const std::vector<double> e = {1.0};
  EXPECT_THROW(mean_average_accuracy(e, 0.0, 10), Error);
  EXPECT_THROW(mean_average_accuracy(e, 1.0, 0), Error);
}

TEST(MeanAverageAccuracy, MonotoneUnderPerturbation) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> err(0.2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> e(1 + i % 40);
    for (double& x : e) x = err(rng);
    const double base = mean_average_accuracy(e, 10.0, 10);
    // Growing any single error never raises the score.
    std::vector<double> worse = e;
    worse[i % worse.size()] += 5.0 * u(rng);
    EXPECT_LE(mean_average_accuracy(worse, 10.0, 10), base);
    // Same bin width, larger maximum: never lower.
    EXPECT_GE(mean_average_accuracy(e, 20.0, 20), base);
    EXPECT_GE(mean_average_accuracy(e, 10.0 + (i % 5 + 1), 10 + i % 5 + 1),
              base);
  }
}

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
  EXPECT_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median(std::vector<double>{})));
}

TEST(Summarize, HandComputedFixture) {
  std::vector<EvalRecord> r = {
      {"ours", {0.005, 0.045}, 0.5, true},
      {"ours", {0.015, 0.055}, 4.5, true},
      {"ours", {0.2, 0.3}, 1.0, false},  // failure: scored 1, 1 and 180
      {"ours", {0.3, 0.012}, 12.5, true},
      {"ours", {0.075, 0.095}, 25.5, true},
      {"other", {0.0, 0.0}, std::nan(""), true},
  };
  const std::vector<double> pm = {10, 20}, fm = {0.1, 0.2};
  const auto s = summarize(r, pm, fm);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].estimator, "ours");
  EXPECT_EQ(s[0].records, 5);
  EXPECT_DOUBLE_EQ(s[0].median_f_err, 0.065);
  EXPECT_DOUBLE_EQ(s[0].maa_f[0], 0.43);
  EXPECT_DOUBLE_EQ(s[0].maa_f[1], 0.565);
  EXPECT_DOUBLE_EQ(s[0].median_p_err, 12.5);
  EXPECT_DOUBLE_EQ(s[0].maa_p[0], 0.32);
  EXPECT_DOUBLE_EQ(s[0].maa_p[1], 0.44);

  EXPECT_EQ(s[1].estimator, "other");
  EXPECT_EQ(s[1].median_f_err, 0.0);
  EXPECT_EQ(s[1].maa_f[0], 1.0);
  EXPECT_TRUE(std::isnan(s[1].median_p_err));
  EXPECT_TRUE(std::isnan(s[1].maa_p[0]));
}

}  // namespace
}  // namespace selfcal
