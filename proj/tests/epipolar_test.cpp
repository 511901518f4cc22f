#include "selfcal/epipolar.hpp"

#include <gtest/gtest.h>

#include <random>

#include "selfcal/synth.hpp"
#include "test_support.hpp"

namespace selfcal {
namespace {

TEST(NormalizeF, ScaledIdentityBlock) {
  Mat3 raw = Mat3::Zero();
  raw(0, 0) = 3.0;
  raw(1, 1) = 3.0;
  const FundamentalMatrix F = normalize_f(raw);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(F(0, 0), h, 1e-15);
  EXPECT_NEAR(F(1, 1), h, 1e-15);
  EXPECT_NEAR(F(2, 2), 0.0, 1e-15);
  EXPECT_NEAR(F.svd().sigma1, h, 1e-15);
  EXPECT_NEAR(F.svd().sigma2, h, 1e-15);
}

TEST(NormalizeF, InvariantsOnSyntheticCameras) {
  const SyntheticScene s = generate_scene(SceneConfig{});
  const FundamentalMatrix& F = s.gt_f;
  EXPECT_NEAR(F.matrix().norm(), 1.0, 1e-14);
  const Vec3 sv = Eigen::JacobiSVD<Mat3>(F.matrix()).singularValues();
  EXPECT_LE(sv(2), 1e-9);

  const SvdF& d = F.svd();
  EXPECT_LE((d.U().transpose() * d.U() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LE((d.V().transpose() * d.V() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LE((d.reconstruct() - F.matrix()).norm(), 1e-10);
  EXPECT_GE(d.sigma1, d.sigma2);
  EXPECT_GT(d.sigma2, 0.0);

  Eigen::Index r = 0, c = 0;
  F.matrix().cwiseAbs().maxCoeff(&r, &c);
  EXPECT_GT(F(r, c), 0.0);
}

TEST(NormalizeF, RankOneRejected) {
  const Mat3 raw = Vec3(1, 2, 3) * Vec3(-1, 0.5, 2).transpose();
  try {
    normalize_f(raw);
    FAIL() << "expected RankDeficient";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
  }
}

TEST(NormalizeF, ZeroAndNonFiniteRejected) {
  EXPECT_THROW(normalize_f(Mat3::Zero()), Error);
  Mat3 bad = Mat3::Identity();
  bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(normalize_f(bad), Error);
}

TEST(NormalizeF, IdempotentAndScaleInvariant) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto pair = testing::random_camera_pair(rng);
    const FundamentalMatrix F = pair.F();
    const FundamentalMatrix G = normalize_f(F.matrix());
    EXPECT_LE((G.matrix() - F.matrix()).cwiseAbs().maxCoeff(), 1e-15);
    const FundamentalMatrix H = normalize_f(-2.5 * F.matrix());
    EXPECT_LE((H.matrix() - F.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Convention, BuilderAndValidityCheckAgree) {
  // Both directions of the convention: the builder's F passes the validity
  // check and the epipolar constraint holds as x2' F x1 = 0.
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto pair = testing::random_camera_pair(rng);
    const FundamentalMatrix F = pair.F();
    EXPECT_TRUE(is_valid_essential(F, pair.k1, pair.k2, 1e-6));

    const Vec3 X1(0.3, -0.2, 4.0);
    const Vec3 X2 = pair.R * X1 + pair.t;
    const Vec3 x1 = pair.k1.K() * X1;
    const Vec3 x2 = pair.k2.K() * X2;
    EXPECT_NEAR(x2.normalized().dot(F.matrix() * x1.normalized()), 0.0,
                1e-12);
  }
}

TEST(IsValidEssential, DoubledFocalFails) {
  const SyntheticScene s = generate_scene(SceneConfig{});
  EXPECT_TRUE(is_valid_essential(s.gt_f, s.k1, s.k2, 1e-6));
  const Intrinsics doubled(2.0 * s.k1.f, s.k1.c);
  EXPECT_FALSE(is_valid_essential(s.gt_f, doubled, s.k2, 1e-6));
}

TEST(IsValidEssential, EssentialPassesWithUnitIntrinsics) {
  std::mt19937_64 rng(13);
  const Mat3 E = skew(testing::random_direction(rng)) *
                 testing::random_rotation(rng);
  const Intrinsics unit(1.0, 0.0, 0.0);
  EXPECT_TRUE(is_valid_essential(normalize_f(E), unit, unit, 1e-12));
}

TEST(Intrinsics, OmegaIsSymmetricPositiveDefinite) {
  const Intrinsics k(600.0, 320.0, 240.0);
  EXPECT_NEAR(k.K().determinant(), 600.0 * 600.0, 1e-6);
  EXPECT_LE((k.K() * k.K_inverse() - Mat3::Identity()).norm(), 1e-14);
  const Mat3 w = k.omega();
  EXPECT_LE((w - w.transpose()).norm(), 0.0);
  EXPECT_EQ(Eigen::LLT<Mat3>(w).info(), Eigen::Success);
}

}  // namespace
}  // namespace selfcal
