#include "maskval/mask_val.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "maskval/generator.h"
#include "oracles.h"

namespace maskval {
namespace {

BinaryMask MaskWith(int w, int h, std::initializer_list<std::pair<int, int>> on) {
  BinaryMask m(w, h);
  for (auto [x, y] : on) m.at(x, y) = 1;
  return m;
}

TEST(MaskIouTest, Examples) {
  const BinaryMask a = MaskWith(4, 4, {{0, 0}, {1, 0}});
  const BinaryMask b = MaskWith(4, 4, {{1, 0}, {2, 0}});
  const BinaryMask c = MaskWith(4, 4, {{3, 3}});
  EXPECT_EQ(MaskIou(a, a), 1.0);
  EXPECT_EQ(MaskIou(a, c), 0.0);
  EXPECT_DOUBLE_EQ(MaskIou(a, b), 1.0 / 3.0);
  EXPECT_EQ(MaskIou(BinaryMask(4, 4), BinaryMask(4, 4)), 0.0);
  EXPECT_THROW(MaskIou(a, BinaryMask(4, 5)), std::invalid_argument);
}

TEST(IouMatrixTest, Examples) {
  const BinaryMask a = MaskWith(4, 4, {{0, 0}});
  const BinaryMask b = MaskWith(4, 4, {{3, 3}});
  IouMatrix one = ComputeIouMatrix({a}, {a});
  ASSERT_EQ(one.rows(), 1u);
  ASSERT_EQ(one.cols(), 1u);
  EXPECT_EQ(one.at(0, 0), 1.0);

  IouMatrix two = ComputeIouMatrix({a, b}, {a, b});
  EXPECT_EQ(two.at(0, 0), 1.0);
  EXPECT_EQ(two.at(1, 1), 1.0);
  EXPECT_EQ(two.at(0, 1), 0.0);
  EXPECT_EQ(two.at(1, 0), 0.0);

  EXPECT_THROW(ComputeIouMatrix({a}, {BinaryMask(3, 4)}),
               std::invalid_argument);
}

TEST(IouMatrixTest, MatchesPixelCounting) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BinaryMask> r, s;
    for (int i = 0; i < 3; ++i) {
      r.push_back(testing::RandomMask(rng, 8, 8, 0.4));
      s.push_back(testing::RandomMask(rng, 8, 8, 0.4));
    }
    const IouMatrix m = ComputeIouMatrix(r, s);
    const std::vector<double> diag = CertaintyTwoStage(m);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        const auto [inter, uni] = testing::CountOverlap(r[i], s[k]);
        const IouCounts counts = MaskIouCounts(r[i], s[k]);
        EXPECT_EQ(counts.intersection, inter);
        EXPECT_EQ(counts.union_, uni);
        EXPECT_EQ(m.at(i, k), uni == 0 ? 0.0 : static_cast<double>(inter) / uni);
      }
      EXPECT_EQ(diag[i], m.at(i, i));
    }
  }
}

TEST(MaskIouPropertyTest, SymmetricBoundedAndOneOnlyWhenIdentical) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const BinaryMask a = testing::RandomMask(rng, 6, 5, density(rng));
    BinaryMask b = trial % 3 == 0 ? a : testing::RandomMask(rng, 6, 5, density(rng));
    const double ab = MaskIou(a, b);
    EXPECT_EQ(ab, MaskIou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(ab == 1.0, a == b && a.Count() > 0);
  }
}

TEST(MatchGreedyTest, Examples) {
  Assignment a = MatchGreedy(IouMatrix::FromRows({{0.9}}));
  EXPECT_EQ(a.mask_for_pose[0], 0u);
  EXPECT_EQ(a.certainty[0], 0.9);

  a = MatchGreedy(IouMatrix::FromRows({{0.8, 0.1}, {0.7, 0.6}}));
  EXPECT_EQ(a.mask_for_pose[0], 0u);
  EXPECT_EQ(a.mask_for_pose[1], 1u);
  EXPECT_EQ(a.certainty[0], 0.8);
  EXPECT_EQ(a.certainty[1], 0.6);

  a = MatchGreedy(IouMatrix::FromRows({{0.0, 0.0}}), 0.01);
  EXPECT_FALSE(a.mask_for_pose[0].has_value());
  EXPECT_EQ(a.certainty[0], 0.0);
}

TEST(MatchGreedyTest, TiesPreferLowestPoseThenMask) {
  Assignment a = MatchGreedy(IouMatrix::FromRows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(a.mask_for_pose[0], 0u);
  EXPECT_EQ(a.mask_for_pose[1], 1u);
  a = MatchGreedy(IouMatrix::FromRows({{0.2, 0.5}, {0.5, 0.2}}));
  EXPECT_EQ(a.mask_for_pose[0], 1u);
  EXPECT_EQ(a.mask_for_pose[1], 0u);
}

TEST(MatchGreedyTest, MoreMasksThanPosesAndViceVersa) {
  Assignment a = MatchGreedy(IouMatrix::FromRows({{0.1, 0.3, 0.2}}));
  EXPECT_EQ(a.mask_for_pose[0], 1u);
  a = MatchGreedy(IouMatrix::FromRows({{0.4}, {0.6}, {0.5}}));
  EXPECT_FALSE(a.mask_for_pose[0].has_value());
  EXPECT_EQ(a.mask_for_pose[1], 0u);
  EXPECT_FALSE(a.mask_for_pose[2].has_value());
  a = MatchGreedy(IouMatrix(0, 3));
  EXPECT_TRUE(a.mask_for_pose.empty());
}

TEST(MatchGreedyPropertyTest, OneToOneAndNoWorseThanIndependentRowMax) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = dim(rng), k = dim(rng);
    IouMatrix m(n, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) m.at(i, j) = val(rng) < 0.3 ? 0.0 : val(rng);
    }
    const Assignment a = MatchGreedy(m);
    std::set<std::size_t> used;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!a.mask_for_pose[i]) {
        EXPECT_EQ(a.certainty[i], 0.0);
        continue;
      }
      EXPECT_TRUE(used.insert(*a.mask_for_pose[i]).second);
      EXPECT_EQ(a.certainty[i], m.at(i, *a.mask_for_pose[i]));
      EXPECT_GE(a.certainty[i], kDefaultMinMatchIou);
      total += a.certainty[i];
    }
    // Independent row maxima; compare only when they form a matching.
    std::set<int> cols;
    double row_total = 0.0;
    bool one_to_one = true;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int j = 1; j < k; ++j) {
        if (m.at(i, j) > m.at(i, best)) best = j;
      }
      if (m.at(i, best) < kDefaultMinMatchIou) continue;
      one_to_one &= cols.insert(best).second;
      row_total += m.at(i, best);
    }
    if (one_to_one) EXPECT_GE(total + 1e-12, row_total);
  }
}

TEST(CertaintyTwoStageTest, Examples) {
  EXPECT_EQ(CertaintyTwoStage(IouMatrix::FromRows({{0.95, 0.2}, {0.2, 0.4}})),
            (std::vector<double>{0.95, 0.4}));
  EXPECT_EQ(CertaintyTwoStage(IouMatrix::FromRows({{0.3}})),
            (std::vector<double>{0.3}));
  EXPECT_THROW(CertaintyTwoStage(IouMatrix::FromRows({{0.3, 0.1}})),
               std::invalid_argument);
}

TEST(UncertaintyTest, Examples) {
  EXPECT_EQ(Uncertainty(0.9, 1.0, 0.8), 1.0 - 0.9);
  EXPECT_EQ(Uncertainty(0.8, 0.5, 0.8), 1.0 - 0.8 * 0.5);
  EXPECT_EQ(Uncertainty(0.0, 0.3, 0.8), 1.0);
  EXPECT_EQ(Uncertainty(0.0, 1.0, 0.8), 1.0);
}

TEST(UncertaintyPropertyTest, MonotoneWithBoundedJump) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const double alpha = unit(rng);
    const double c1 = unit(rng), c2 = unit(rng), v = unit(rng);
    const double u1 = Uncertainty(c1, v, alpha), u2 = Uncertainty(c2, v, alpha);
    EXPECT_GE(u1, 0.0);
    EXPECT_LE(u1, 1.0);
    if (c1 <= c2) EXPECT_GE(u1, u2);
    const double v2 = unit(rng) * alpha;
    const double v1 = unit(rng) * v2;
    EXPECT_GE(Uncertainty(c1, v1, alpha), Uncertainty(c1, v2, alpha));
    // Jump across v = alpha.
    const double below = Uncertainty(c1, std::nextafter(alpha, 0.0), alpha);
    const double at = Uncertainty(c1, alpha, alpha);
    EXPECT_LE(below - at, c1 * (1.0 - alpha) + 1e-12);
    EXPECT_GE(below - at, -1e-12);
  }
}

TEST(MaskValConfigTest, ValidateAndParse) {
  EXPECT_NO_THROW(MaskValConfig{}.Validate());
  MaskValConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = MaskValConfig{};
  bad.pad_factor = 0;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  EXPECT_EQ(ParseAssociationMode("greedy"), AssociationMode::kGreedy);
  EXPECT_EQ(ParseAssociationMode("two_stage"), AssociationMode::kTwoStage);
  EXPECT_EQ(ToString(AssociationMode::kTwoStage), "two_stage");
  EXPECT_THROW(ParseAssociationMode("hungarian"), std::invalid_argument);
}

class QuantifySceneTest : public ::testing::Test {
 protected:
  CameraIntrinsics k_{600, 600, 320, 240, 640, 480};
  std::map<std::string, TriangleMesh> models_{
      {"bar", MakeBox(Vec3(0.02, 0.1, 0.02))},
      {"plate", MakeBox(Vec3(0.08, 0.08, 0.01))}};

  BinaryMask Silhouette(const std::string& cls, const Pose& pose) {
    return MaskFromDepth(RenderDepth(pose, models_.at(cls), k_).depth);
  }
};

TEST_F(QuantifySceneTest, PerfectEstimateHasZeroUncertainty) {
  const Pose gt(Mat3::Identity(), Vec3(0.02, -0.01, 1.0));
  const UncertaintyReport r = QuantifyScene(
      {{gt, "bar", std::nullopt}}, {{Silhouette("bar", gt), "bar", 1}},
      models_, k_, MaskValConfig{});
  ASSERT_EQ(r.estimates.size(), 1u);
  EXPECT_EQ(r.estimates[0].certainty, 1.0);
  EXPECT_EQ(r.estimates[0].visibility, 1.0);
  EXPECT_EQ(r.estimates[0].uncertainty, 0.0);
  EXPECT_FALSE(r.estimates[0].unmatched);
  EXPECT_EQ(r.estimates[0].matched_mask, 0u);
}

TEST_F(QuantifySceneTest, DisjointSilhouetteIsFullyUncertain) {
  const Pose gt(Mat3::Identity(), Vec3(0, 0, 1.0));
  const Pose est(Mat3::Identity(), Vec3(0.05, 0, 1.0));
  const BinaryMask seg = Silhouette("bar", gt);
  EXPECT_EQ(MaskIou(seg, Silhouette("bar", est)), 0.0);
  const UncertaintyReport r = QuantifyScene(
      {{est, "bar", std::nullopt}}, {{seg, "bar", 1}}, models_, k_, {});
  EXPECT_EQ(r.estimates[0].uncertainty, 1.0);
  EXPECT_TRUE(r.estimates[0].unmatched);
}

TEST_F(QuantifySceneTest, NoMaskOfSameClassIsUnmatched) {
  const Pose gt(Mat3::Identity(), Vec3(0, 0, 1.0));
  const UncertaintyReport r = QuantifyScene(
      {{gt, "bar", std::nullopt}}, {{Silhouette("bar", gt), "plate", 1}},
      models_, k_, {});
  EXPECT_EQ(r.estimates[0].uncertainty, 1.0);
  EXPECT_TRUE(r.estimates[0].unmatched);
  EXPECT_FALSE(r.estimates[0].matched_mask.has_value());
}

TEST_F(QuantifySceneTest, MissingModelNamesTheClass) {
  try {
    QuantifyScene({{Pose(), "wrench", std::nullopt}}, {}, models_, k_, {});
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("wrench"), std::string::npos);
  }
}

TEST_F(QuantifySceneTest, MaskSizeMismatchIsRejected) {
  EXPECT_THROW(QuantifyScene({}, {{BinaryMask(10, 10), "bar", 1}}, models_, k_,
                             {}),
               std::invalid_argument);
}

TEST_F(QuantifySceneTest, BehindCameraRendersEmpty) {
  const Pose gt(Mat3::Identity(), Vec3(0, 0, 1.0));
  const Pose behind(Mat3::Identity(), Vec3(0, 0, -1.0));
  const UncertaintyReport r = QuantifyScene(
      {{behind, "bar", std::nullopt}}, {{Silhouette("bar", gt), "bar", 1}},
      models_, k_, {});
  EXPECT_TRUE(r.estimates[0].empty_render);
  EXPECT_EQ(r.estimates[0].uncertainty, 1.0);
  EXPECT_EQ(r.estimates[0].visibility, 0.0);
}

TEST_F(QuantifySceneTest, TruncatedObjectUsesVisibility) {
  // Centered on the left border: half the silhouette is outside the image.
  const Pose gt(Mat3::Identity(), Vec3(-320.0 / 600.0, 0, 1.0));
  const UncertaintyReport r = QuantifyScene(
      {{gt, "plate", std::nullopt}}, {{Silhouette("plate", gt), "plate", 1}},
      models_, k_, {});
  EXPECT_EQ(r.estimates[0].certainty, 1.0);
  EXPECT_NEAR(r.estimates[0].visibility, 0.5, 0.02);
  EXPECT_DOUBLE_EQ(r.estimates[0].uncertainty, 1.0 - r.estimates[0].visibility);
}

TEST_F(QuantifySceneTest, GreedyPairsEachPoseWithItsOwnMask) {
  const Pose a(Mat3::Identity(), Vec3(-0.1, 0, 1.0));
  const Pose b(Mat3::Identity(), Vec3(0.1, 0, 1.0));
  const Pose b_est(Mat3::Identity(), Vec3(0.105, 0, 1.0));
  const UncertaintyReport r = QuantifyScene(
      {{b_est, "bar", std::nullopt}, {a, "bar", std::nullopt}},
      {{Silhouette("bar", a), "bar", 1}, {Silhouette("bar", b), "bar", 2}},
      models_, k_, {});
  EXPECT_EQ(r.estimates[0].matched_mask, 1u);
  EXPECT_EQ(r.estimates[1].matched_mask, 0u);
  EXPECT_EQ(r.estimates[1].uncertainty, 0.0);
  EXPECT_GT(r.estimates[0].uncertainty, 0.0);
  EXPECT_EQ(r.estimates[0].uncertainty,
            1.0 - MaskIou(Silhouette("bar", b_est), Silhouette("bar", b)));
}

TEST_F(QuantifySceneTest, TwoStageUsesInstanceIds) {
  const Pose a(Mat3::Identity(), Vec3(-0.1, 0, 1.0));
  const Pose b(Mat3::Identity(), Vec3(0.1, 0, 1.0));
  const std::vector<SegmentationInput> segs{{Silhouette("bar", a), "bar", 7},
                                            {Silhouette("bar", b), "bar", 9}};
  MaskValConfig cfg;
  cfg.association_mode = AssociationMode::kTwoStage;
  // The pose for instance 9 is placed on instance 7: two-stage keeps the
  // declared pairing, greedy would not.
  const UncertaintyReport r = QuantifyScene(
      {{a, "bar", 9}, {a, "bar", 7}, {a, "bar", std::nullopt}}, segs, models_,
      k_, cfg);
  EXPECT_EQ(r.estimates[0].matched_mask, 1u);
  EXPECT_EQ(r.estimates[0].certainty, 0.0);
  EXPECT_EQ(r.estimates[0].uncertainty, 1.0);
  EXPECT_EQ(r.estimates[1].matched_mask, 0u);
  EXPECT_EQ(r.estimates[1].uncertainty, 0.0);
  EXPECT_TRUE(r.estimates[2].unmatched);
}

}  // namespace
}  // namespace maskval
