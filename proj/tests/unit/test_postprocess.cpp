#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace camkit;

namespace {

RawSaliency raw(std::size_t h, std::size_t w, std::vector<float> v) {
  return {Tensor({h, w}, std::move(v)), SaliencySource::GuidedCam};
}

PostprocessConfig config(double sigma, int kernel, std::size_t H, std::size_t W) {
  PostprocessConfig c;
  c.smoothing_sigma = sigma;
  c.smoothing_kernel = kernel;
  c.target_height = H;
  c.target_width = W;
  return c;
}

// Direct 2-D convolution with mirrored borders (edge sample repeated).
std::vector<double> smooth_2d(const std::vector<double> &src, int h, int w, double sigma,
                              int size) {
  const int r = size / 2;
  auto mirror = [](int i, int n) {
    while (i < 0 || i >= n)
      i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  double norm = 0.0;
  for (int d = -r; d <= r; ++d)
    norm += std::exp(-d * d / (2 * sigma * sigma));
  std::vector<double> out(src.size(), 0.0);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj) {
          const double wgt = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma)) / (norm * norm);
          out[i * w + j] += wgt * src[mirror(i + di, h) * w + mirror(j + dj, w)];
        }
  return out;
}

} // namespace

TEST(ImageOps, ReflectIndex) {
  EXPECT_EQ(image::reflect_index(-1, 4), 0u);
  EXPECT_EQ(image::reflect_index(-2, 4), 1u);
  EXPECT_EQ(image::reflect_index(4, 4), 3u);
  EXPECT_EQ(image::reflect_index(5, 4), 2u);
  EXPECT_EQ(image::reflect_index(9, 4), 1u);
  EXPECT_EQ(image::reflect_index(-3, 1), 0u);
}

TEST(ImageOps, KernelIsNormalisedAndSymmetric) {
  const auto k = image::gaussian_kernel(1.0, 5);
  double sum = 0.0;
  for (double v : k)
    sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(k[0], k[4]);
  EXPECT_GT(k[2], k[1]);
  EXPECT_THROW(image::gaussian_kernel(1.0, 4), ConfigError);
  EXPECT_THROW(image::gaussian_kernel(-1.0, 5), ConfigError);
  EXPECT_EQ(image::kernel_size_for(10.0), 61);
}

TEST(ImageOps, SmoothingMatchesDirectConvolution) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (auto [h, w] : {std::pair{7, 5}, std::pair{3, 3}, std::pair{1, 6}, std::pair{2, 2}}) {
    std::vector<double> src(h * w);
    Tensor t({std::size_t(h), std::size_t(w)});
    for (int i = 0; i < h * w; ++i)
      t[i] = float(src[i] = float(d(rng)));
    const auto expect = smooth_2d(src, h, w, 1.0, 5);
    const Tensor got = image::gaussian_smooth(t, 1.0, 5);
    for (int i = 0; i < h * w; ++i)
      EXPECT_NEAR(got[i], expect[i], 1e-6);
  }
}

TEST(ImageOps, SmoothingPreservesConstants) {
  const Tensor t = image::gaussian_smooth(Tensor({3, 4, 5}, 0.25f), 10.0, 61);
  for (float v : t.data())
    EXPECT_NEAR(v, 0.25f, 1e-6);
}

TEST(ImageOps, BilinearAlignCorners) {
  const Tensor src({2, 2}, {0, 1, 2, 3});
  const Tensor out = image::resize_bilinear(src, 3, 3);
  EXPECT_EQ(std::vector<float>(out.data().begin(), out.data().end()),
            (std::vector<float>{0, 0.5f, 1, 1, 1.5f, 2, 2, 2.5f, 3}));
  const Tensor one = image::resize_bilinear(Tensor({1, 1}, 0.7f), 4, 2);
  for (float v : one.data())
    EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(Postprocess, IdentityPipeline) {
  const auto s = postprocess(raw(2, 2, {0, 0, 0, 1}), config(0.0, 5, 2, 2));
  EXPECT_EQ(std::vector<float>(s.values.data().begin(), s.values.data().end()),
            (std::vector<float>{0, 0, 0, 1}));
}

TEST(Postprocess, ZeroMapStaysZero) {
  for (auto [H, W] : {std::pair{1, 1}, std::pair{5, 7}, std::pair{32, 32}}) {
    const auto s = postprocess(raw(1, 1, {0}), config(1.0, 5, H, W));
    for (float v : s.values.data())
      EXPECT_EQ(v, 0.0f);
  }
}

TEST(Postprocess, BilinearUpsampleThenNormalise) {
  const auto s = postprocess(raw(1, 2, {0, 2}), config(0.0, 5, 1, 3));
  EXPECT_EQ(std::vector<float>(s.values.data().begin(), s.values.data().end()),
            (std::vector<float>{0, 0.5f, 1}));
}

TEST(Postprocess, OutputIsInUnitRangeWithPeakOne) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> d(0.0f, 3.0f);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor t({5, 4});
    for (auto &v : t.data())
      v = d(rng);
    const auto s = postprocess({t, SaliencySource::GradCam}, config(1.0, 5, 17, 13));
    EXPECT_EQ(s.height(), 17u);
    EXPECT_EQ(s.width(), 13u);
    EXPECT_EQ(s.source, SaliencySource::GradCam);
    float hi = 0.0f;
    for (float v : s.values.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
      hi = std::max(hi, v);
    }
    EXPECT_EQ(hi, 1.0f);
  }
}

TEST(Postprocess, ConstantNonZeroMapBecomesOnes) {
  const auto s = postprocess(raw(2, 2, {3, 3, 3, 3}), config(1.0, 3, 4, 4));
  for (float v : s.values.data())
    EXPECT_EQ(v, 1.0f);
}

TEST(Postprocess, InvalidConfig) {
  EXPECT_THROW(postprocess(raw(2, 2, {0, 0, 0, 1}), config(1.0, 4, 4, 4)), ConfigError);
  EXPECT_THROW(postprocess(raw(2, 2, {0, 0, 0, 1}), config(-1.0, 5, 4, 4)), ConfigError);
  EXPECT_THROW(postprocess(raw(2, 2, {0, 0, 0, 1}), config(1.0, 5, 1, 4)), ConfigError);
  EXPECT_THROW(postprocess(raw(2, 2, {0, 0, 0, 1}), config(1.0, 5, 0, 0)), ConfigError);
}
