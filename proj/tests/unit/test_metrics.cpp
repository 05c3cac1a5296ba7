#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace camkit;
using testing_support::saliency_of;

namespace {

BinaryMask mask_of(std::size_t h, std::size_t w, std::vector<int> bits) {
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < bits.size(); ++i)
    m.set(i, bits[i] != 0);
  return m;
}

Annotation box_annotation(int cls, double x0, double y0, double x1, double y1) {
  Annotation a;
  a.kind = AnnotationKind::BBoxes;
  a.boxes.push_back({cls, x0, y0, x1, y1});
  return a;
}

SaliencyMap peak_at(std::size_t h, std::size_t w, std::size_t y, std::size_t x) {
  std::vector<float> v(h * w, 0.1f);
  v[y * w + x] = 1.0f;
  return saliency_of(h, w, v);
}

} // namespace

TEST(Zones, AllOnesSaliency) {
  const Tensor img({3, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const auto ones = saliency_of(2, 2, {1, 1, 1, 1});
  EXPECT_EQ(soft_mask(img, ones, Zone::Salient), img);
  EXPECT_EQ(soft_mask(img, ones, Zone::Context), Tensor({3, 2, 2}, 0.0f));
}

TEST(Zones, HalfSaliencyBroadcastsOverChannels) {
  const Tensor img({3, 1, 1}, {2, 4, 6});
  const Tensor out = soft_mask(img, saliency_of(1, 1, {0.5f}), Zone::Salient);
  EXPECT_EQ(out, Tensor({3, 1, 1}, {1, 2, 3}));
  EXPECT_EQ(soft_mask(img, saliency_of(1, 1, {0.25f}), Zone::Context),
            Tensor({3, 1, 1}, {1.5f, 3, 4.5f}));
}

TEST(Zones, DimMismatch) {
  EXPECT_THROW(soft_mask(Tensor({3, 2, 2}), saliency_of(1, 1, {0}), Zone::Salient), ShapeError);
}

TEST(Zones, DropFraction) {
  EXPECT_NEAR(drop_fraction(0.8, 0.2), 0.75, 1e-15);
  EXPECT_EQ(drop_fraction(0.5, 0.9), 0.0);
  EXPECT_EQ(drop_fraction(0.5, 0.5), 0.0);
  EXPECT_EQ(drop_fraction(0.0, 0.3), 0.0);
  EXPECT_THROW(drop_fraction(1.2, 0.3), RangeError);
  EXPECT_THROW(drop_fraction(0.2, -0.1), RangeError);
  EXPECT_THROW(drop_fraction(std::nan(""), 0.1), RangeError);
}

TEST(Zones, IncreaseIndicator) {
  EXPECT_EQ(increase_indicator(0.3, 0.5), 1);
  EXPECT_EQ(increase_indicator(0.5, 0.5), 0);
  EXPECT_EQ(increase_indicator(0.5, 0.3), 0);
  const std::vector<int> ind = {1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(increase_rate(ind), 0.5);
  EXPECT_EQ(increase_rate({}), 0.0);
  EXPECT_THROW(increase_indicator(0.3, 1.5), RangeError);
}

TEST(Binarize, ThresholdConvention) {
  EXPECT_EQ(binarize(saliency_of(1, 2, {0.2f, 0.8f}), 0.5), mask_of(1, 2, {0, 1}));
  EXPECT_EQ(binarize(saliency_of(2, 2, {0, 0, 0, 0}), 0.5).count(), 0u);
  EXPECT_EQ(binarize(saliency_of(1, 1, {0.5f}), 0.5), mask_of(1, 1, {1}));
}

TEST(Binarize, TauMustBeOpenUnitInterval) {
  const auto s = saliency_of(1, 1, {0.5f});
  for (double tau : {0.0, 1.0, -0.1, 1.5, std::nan("")})
    EXPECT_THROW(binarize(s, tau), ConfigError) << tau;
}

TEST(Overlap, DiceExamples) {
  const auto a = mask_of(2, 3, {1, 1, 1, 1, 0, 0});
  const auto b = mask_of(2, 3, {1, 1, 0, 0, 0, 0});
  EXPECT_EQ(dice(a, a), 1.0);
  EXPECT_NEAR(dice(a, b), 2.0 * 2.0 / 6.0, 1e-15);
  EXPECT_EQ(dice(mask_of(1, 2, {1, 0}), mask_of(1, 2, {0, 1})), 0.0);
  EXPECT_EQ(dice(BinaryMask(2, 2), BinaryMask(2, 2)), 1.0);
}

TEST(Overlap, IouExamples) {
  const auto a = mask_of(2, 2, {1, 1, 1, 0});
  const auto b = mask_of(2, 2, {1, 1, 0, 1});
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, b), 0.5);
  EXPECT_EQ(iou(mask_of(1, 2, {1, 0}), mask_of(1, 2, {0, 1})), 0.0);
  EXPECT_EQ(iou(BinaryMask(2, 2), BinaryMask(2, 2)), 1.0);
  EXPECT_EQ(iou(BinaryMask(2, 2), a), 0.0);
}

TEST(Overlap, DimMismatch) {
  EXPECT_THROW(dice(BinaryMask(2, 2), BinaryMask(2, 3)), ShapeError);
  EXPECT_THROW(iou(BinaryMask(3, 2), BinaryMask(2, 2)), ShapeError);
}

TEST(Overlap, DiceIouRelationOnRandomMasks) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9;
    const double pa = double(rng() % 100) / 100.0, pb = double(rng() % 100) / 100.0;
    std::bernoulli_distribution da(pa), db(pb);
    BinaryMask a(h, w), b(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
      a.set(i, da(rng));
      b.set(i, db(rng));
    }
    const double j = iou(a, b);
    EXPECT_NEAR(dice(a, b), 2.0 * j / (1.0 + j), 1e-9);
  }
}

TEST(Pointing, BoxContainment) {
  const auto box = box_annotation(4, 2, 2, 5, 5);
  EXPECT_TRUE(pointing_game(peak_at(8, 8, 3, 3), box, 4).hit);
  const auto miss = pointing_game(peak_at(8, 8, 0, 0), box, 4);
  EXPECT_FALSE(miss.hit);
  EXPECT_FALSE(miss.degenerate);
  EXPECT_EQ(miss.y, 0u);
  EXPECT_EQ(miss.x, 0u);
}

TEST(Pointing, TiesResolveToFirstRowMajorPixel) {
  const auto s = saliency_of(2, 3, {0.2f, 0.9f, 0.1f, 0.9f, 0.9f, 0.0f});
  const auto [y, x] = argmax_pixel(s.values);
  EXPECT_EQ(y, 0u);
  EXPECT_EQ(x, 1u);
}

TEST(Pointing, SegmentationMaskRegion) {
  Annotation a;
  a.kind = AnnotationKind::SegMask;
  a.height = 2;
  a.width = 2;
  a.mask = {0, 7, 7, 255};
  EXPECT_TRUE(pointing_game(peak_at(2, 2, 1, 0), a, 7).hit);
  EXPECT_FALSE(pointing_game(peak_at(2, 2, 1, 1), a, 7).hit);
  EXPECT_THROW(pointing_game(peak_at(3, 3, 0, 0), a, 7), ShapeError);
}

TEST(Pointing, DegenerateSaliencyIsFlaggedMiss) {
  const auto r = pointing_game(saliency_of(2, 2, {0, 0, 0, 0}), box_annotation(1, 0, 0, 2, 2), 1);
  EXPECT_FALSE(r.hit);
  EXPECT_TRUE(r.degenerate);
}

TEST(Pointing, TargetClassMustBeAnnotated) {
  EXPECT_THROW(pointing_game(peak_at(4, 4, 1, 1), box_annotation(1, 0, 0, 2, 2), 2),
               AnnotationError);
}

TEST(Pointing, Accuracy) {
  const std::vector<PointingResult> r = {{true}, {true}, {false}};
  EXPECT_NEAR(pointing_accuracy(r), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(pointing_accuracy({}), 0.0);
}

TEST(Pointing, InvariantUnderPositiveScaling) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  const auto box = box_annotation(0, 1, 1, 4, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<float> v(30);
    for (auto &x : v)
      x = d(rng);
    const auto base = pointing_game(saliency_of(5, 6, v), box, 0);
    for (float c : {0.01f, 0.5f, 3.0f, 1000.0f}) {
      auto scaled = v;
      for (auto &x : scaled)
        x *= c;
      const auto r = pointing_game(saliency_of(5, 6, scaled), box, 0);
      EXPECT_EQ(r.hit, base.hit);
      EXPECT_EQ(r.y, base.y);
      EXPECT_EQ(r.x, base.x);
    }
  }
}
