#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace camkit;
using testing_support::fixture;
using testing_support::TempDir;

TEST(Softmax, UniformLogits) {
  const auto p = softmax(std::vector<float>{0.0f, 0.0f});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, SaturatesWithoutOverflow) {
  const auto p = softmax(std::vector<float>{1000.0f, 0.0f});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_GE(p[1], 0.0);
  EXPECT_TRUE(std::isfinite(p[1]));
}

TEST(Softmax, SumsToOne) {
  std::mt19937 rng(1);
  std::normal_distribution<float> d(0.0f, 5.0f);
  for (int t = 0; t < 20; ++t) {
    std::vector<float> l(17);
    for (auto &v : l)
      v = d(rng);
    const auto p = softmax(l);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < l.size(); ++i)
      EXPECT_NEAR(p[i], testing_support::probability(l, i), 1e-12);
  }
}

TEST(StubScorer, ConstantLogits) {
  auto s = StubScorer::constant({0.0f, 0.0f});
  const auto r = s.score(Tensor({3, 4, 4}));
  EXPECT_EQ(r.probabilities, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(s.num_classes(), 2u);
}

TEST(StubScorer, HashLookupAndFallback) {
  Tensor a({3, 2, 2}, 1.0f), b({3, 2, 2}, 2.0f);
  StubScorer s({}, {{image_hash(a), {3.0f, 0.0f}}}, std::vector<float>{0.0f, 3.0f});
  EXPECT_TRUE(s.contains(a));
  EXPECT_FALSE(s.contains(b));
  EXPECT_GT(s.score(a).probability(0), 0.9);
  EXPECT_LT(s.score(b).probability(0), 0.1);
  StubScorer strict({}, {{image_hash(a), {3.0f, 0.0f}}}, std::nullopt);
  EXPECT_THROW(strict.score(b), ScorerError);
}

TEST(StubScorer, HashDependsOnShapeAndBits) {
  EXPECT_NE(image_hash(Tensor({3, 2, 4})), image_hash(Tensor({3, 4, 2})));
  Tensor pos({3, 1, 1}, 0.0f), neg({3, 1, 1}, 0.0f);
  neg[0] = -0.0f;
  EXPECT_NE(image_hash(pos), image_hash(neg));
  EXPECT_EQ(image_hash(pos).size(), 16u);
}

TEST(StubScorer, RejectsInconsistentTables) {
  EXPECT_THROW(StubScorer({}, {{"a", {1.0f}}}, std::vector<float>{1.0f, 2.0f}), ModelLoadError);
  EXPECT_THROW(StubScorer({}, {}, std::nullopt), ModelLoadError);
}

TEST(StubScorer, FixtureTableMatchesBundleImages) {
  auto s = load_stub_scorer(fixture("stub_scorer.json"), InputSpec{3, 32, 32, {}});
  for (const char *stem : {"img_a", "img_b", "img_c"}) {
    const auto b = load_bundle(fixture(std::string("collection/") + stem + ".bundle"));
    ASSERT_TRUE(s->contains(b.image)) << stem;
    const auto r = s->score(b.image);
    for (std::size_t c = 0; c < 10; ++c)
      EXPECT_EQ(r.logits[c], b.class_scores[c]);
  }
}

TEST(StubScorer, SaveLoadRoundTrip) {
  TempDir dir;
  const Tensor img({3, 5, 5}, 0.25f);
  save_stub_scorer(dir / "s.json", {{image_hash(img), {1.0f, 2.0f, 3.0f}}},
                   std::vector<float>{0.0f, 0.0f, 0.0f}, Shape{3, 5, 5});
  auto s = load_scorer(dir / "s.json", InputSpec{});
  EXPECT_EQ(s->input_spec().height, 5u);
  EXPECT_EQ(s->score(img).logits, (std::vector<float>{1.0f, 2.0f, 3.0f}));
  EXPECT_THROW(s->score(Tensor({3, 4, 4})), ShapeError);
}

TEST(StubScorer, LoadErrors) {
  TempDir dir;
  EXPECT_THROW(load_stub_scorer(dir / "absent.json"), ModelLoadError);
  testing_support::write_text(dir / "bad.json", "{\"table\": 3}");
  EXPECT_THROW(load_stub_scorer(dir / "bad.json"), ModelLoadError);
  testing_support::write_text(dir / "shape.json",
                              "{\"input_shape\": [3, 8, 8], \"default\": [0, 1]}");
  EXPECT_THROW(load_stub_scorer(dir / "shape.json", InputSpec{3, 16, 16, {}}), ModelLoadError);
}
