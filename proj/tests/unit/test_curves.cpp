#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace camkit;
using testing_support::saliency_of;
using testing_support::SubsetScorer;

namespace {

// Pixel values chosen to differ from both the zero image and any blur of it.
Tensor tiny_image(std::size_t h, std::size_t w) {
  Tensor img({3, h, w});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = float(1 << (i % (h * w))) + 0.25f * float(i / (h * w));
  return img;
}

std::vector<SubsetScorer::Logits> random_table(std::size_t pixels, std::mt19937 &rng) {
  std::normal_distribution<float> d(0.0f, 2.0f);
  std::vector<SubsetScorer::Logits> t(std::size_t(1) << pixels);
  for (auto &l : t)
    l = {d(rng), d(rng)};
  return t;
}

} // namespace

TEST(Curves, RankingIsStableDescending) {
  const Tensor s({1, 5}, {0.5f, 0.9f, 0.5f, 0.1f, 0.9f});
  EXPECT_EQ(rank_pixels(s), (std::vector<std::size_t>{1, 4, 0, 2, 3}));
}

TEST(Curves, PixelsAtStepRoundsHalfUp) {
  EXPECT_EQ(pixels_at_step(0, 4, 10), 0u);
  EXPECT_EQ(pixels_at_step(1, 4, 10), 3u); // 2.5
  EXPECT_EQ(pixels_at_step(3, 4, 10), 8u); // 7.5
  EXPECT_EQ(pixels_at_step(4, 4, 10), 10u);
  EXPECT_EQ(pixels_at_step(1, 3, 2), 1u); // 0.667
  for (std::size_t k = 0; k <= 7; ++k)
    EXPECT_EQ(pixels_at_step(k, 7, 5), oracle::switched(k, 7, 5));
}

TEST(Curves, ConstantScorerGivesConstantAuc) {
  const float l = std::log(0.7f / 0.3f);
  auto scorer = StubScorer::constant({l, 0.0f});
  const double p = testing_support::probability({l, 0.0f}, 0);
  const Tensor img({3, 4, 4}, 1.0f);
  std::vector<float> sal(16);
  std::iota(sal.begin(), sal.end(), 0.0f);
  for (auto mode : {CurveMode::Insertion, CurveMode::Deletion}) {
    const auto c = insertion_deletion(img, saliency_of(4, 4, sal), scorer, 0, mode, {});
    EXPECT_EQ(c.fractions.size(), 101u);
    EXPECT_NEAR(c.auc, p, 1e-12);
    EXPECT_NEAR(p, 0.7, 1e-6);
  }
}

TEST(Curves, MatchesEnumerationOnTinyImages) {
  std::mt19937 rng(17);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{1, 2}, {2, 2}}) {
    const std::size_t n = h * w;
    const Tensor img = tiny_image(h, w);
    for (int trial = 0; trial < 10; ++trial) {
      const auto table = random_table(n, rng);
      std::vector<float> sal(n);
      std::vector<double> sal_d(n);
      std::uniform_int_distribution<int> level(0, 3); // coarse levels force ties
      for (std::size_t p = 0; p < n; ++p)
        sal_d[p] = sal[p] = float(level(rng)) / 3.0f;
      for (int steps : {2, 3, 4, 5, 10}) {
        CurveConfig cfg;
        cfg.steps = steps;
        for (bool insertion : {true, false}) {
          SubsetScorer scorer(img, table);
          const auto c = insertion_deletion(img, saliency_of(h, w, sal), scorer, 0,
                                            insertion ? CurveMode::Insertion : CurveMode::Deletion,
                                            cfg);
          const auto expect = oracle::curve_by_enumeration(
              sal_d, std::size_t(steps), insertion,
              [&](unsigned bits) { return testing_support::probability(table[bits], 0); });
          ASSERT_EQ(c.scores.size(), expect.size());
          for (std::size_t k = 0; k < expect.size(); ++k) {
            EXPECT_NEAR(c.scores[k], expect[k], 1e-9);
            EXPECT_DOUBLE_EQ(c.fractions[k], double(k) / steps);
          }
          EXPECT_NEAR(c.auc, oracle::trapezoid_uniform(expect), 1e-9);
        }
      }
    }
  }
}

TEST(Curves, EndpointContracts) {
  const Tensor img = tiny_image(2, 2);
  std::mt19937 rng(4);
  const auto table = random_table(4, rng);
  const auto sal = saliency_of(2, 2, {0.1f, 0.7f, 0.3f, 1.0f});
  SubsetScorer del(img, table);
  const auto d = insertion_deletion(img, sal, del, 1, CurveMode::Deletion, {});
  EXPECT_EQ(del.seen.front(), 0b1111u);
  EXPECT_EQ(del.seen.back(), 0u);
  SubsetScorer probe(img, table);
  EXPECT_EQ(d.scores.front(), probe.score(img).probability(1));
  EXPECT_EQ(d.scores.back(), probe.score(Tensor(img.shape(), 0.0f)).probability(1));

  SubsetScorer ins(img, table);
  const auto i = insertion_deletion(img, sal, ins, 1, CurveMode::Insertion, {});
  EXPECT_EQ(ins.seen.front(), 0u);
  EXPECT_EQ(ins.seen.back(), 0b1111u);
  EXPECT_EQ(i.scores.back(), probe.score(img).probability(1));
  const Tensor blurred = make_baseline(img, {Baseline::Kind::Blur, 10.0});
  EXPECT_EQ(i.scores.front(), probe.score(blurred).probability(1));
}

TEST(Curves, BlurBaselineDiffersFromImage) {
  const Tensor img = tiny_image(2, 2);
  const Tensor blurred = make_baseline(img, {Baseline::Kind::Blur, 10.0});
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_NE(blurred[i], img[i]);
  EXPECT_EQ(make_baseline(img, {Baseline::Kind::Zero, 0.0}), Tensor(img.shape(), 0.0f));
  EXPECT_THROW(make_baseline(img, {Baseline::Kind::Blur, 0.0}), ConfigError);
}

TEST(Curves, InvalidArguments) {
  auto scorer = StubScorer::constant({0.0f, 0.0f});
  const Tensor img({3, 2, 2}, 1.0f);
  CurveConfig cfg;
  cfg.steps = 1;
  EXPECT_THROW(insertion_deletion(img, saliency_of(2, 2, {0, 0, 0, 0}), scorer, 0,
                                  CurveMode::Deletion, cfg),
               ConfigError);
  EXPECT_THROW(insertion_deletion(img, saliency_of(1, 2, {0, 0}), scorer, 0,
                                  CurveMode::Deletion, {}),
               ShapeError);
}

TEST(Curves, ScorerFailurePropagates) {
  StubScorer strict({}, {{"0000000000000000", {0.0f, 1.0f}}}, std::nullopt);
  EXPECT_THROW(insertion_deletion(Tensor({3, 2, 2}, 1.0f), saliency_of(2, 2, {1, 0, 0, 0}),
                                  strict, 0, CurveMode::Deletion, {}),
               ScorerError);
}
