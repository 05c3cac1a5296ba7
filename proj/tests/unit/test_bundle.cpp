#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace camkit;
using testing_support::TempDir;

namespace {

Tensor filled(Shape shape, std::mt19937 &rng) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Tensor t(std::move(shape));
  for (auto &v : t.data())
    v = d(rng);
  return t;
}

ExtractionBundle make_bundle(std::size_t k, std::size_t h, std::size_t w, std::size_t H,
                             std::size_t W, std::size_t classes, int cls) {
  std::mt19937 rng(11);
  ExtractionBundle b;
  b.image = filled({3, H, W}, rng);
  b.features = filled({k, h, w}, rng);
  b.gradients = filled({k, h, w}, rng);
  b.class_scores = filled({classes}, rng);
  b.class_index = cls;
  b.layer_name = "layer4";
  b.model_id = "resnet50";
  b.preprocessing = {{224, 224}, {0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
  return b;
}

void edit_manifest(const std::filesystem::path &dir,
                   const std::function<void(nlohmann::json &)> &edit) {
  auto j = read_json_file(dir / "manifest.json");
  edit(j);
  testing_support::write_text(dir / "manifest.json", j.dump(2));
}

} // namespace

TEST(Bundle, FullSizeRoundTrip) {
  TempDir dir;
  const auto b = make_bundle(512, 14, 14, 224, 224, 1000, 281);
  save_bundle(b, dir / "cat.bundle");
  const auto loaded = load_bundle(dir / "cat.bundle");
  EXPECT_EQ(loaded, b);
  EXPECT_EQ(loaded.class_index, 281);
  EXPECT_EQ(loaded.channels(), 512u);
}

TEST(Bundle, PreprocessingAndExtraKeysPreserved) {
  TempDir dir;
  auto b = make_bundle(2, 2, 2, 4, 4, 3, 1);
  b.extra["gradient_target"] = "logit";
  b.extra["source_image"] = {{"path", "x.jpg"}, {"sha1", "abc"}};
  save_bundle(b, dir / "b");
  const auto m = read_manifest(dir / "b");
  EXPECT_EQ(m.preprocessing, b.preprocessing);
  EXPECT_EQ(m.extra.at("gradient_target"), "logit");
  EXPECT_EQ(load_bundle(dir / "b").extra, b.extra);
}

TEST(Bundle, LoadsCheckedInFixture) {
  const auto b = load_bundle(testing_support::fixture("collection/img_a.bundle"));
  EXPECT_EQ(b.image.shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(b.features.shape(), (Shape{16, 8, 8}));
  EXPECT_EQ(b.class_scores.size(), 10u);
  EXPECT_EQ(b.extra.at("gradient_target"), "logit");
}

TEST(Bundle, GradientShapeMismatch) {
  auto b = make_bundle(4, 4, 4, 8, 8, 3, 0);
  b.gradients = Tensor({4, 2, 2});
  EXPECT_THROW(validate_bundle(b), ShapeError);
}

TEST(Bundle, GradientShapeMismatchOnDisk) {
  TempDir dir;
  const auto b = make_bundle(4, 4, 4, 8, 8, 3, 0);
  save_bundle(b, dir / "b");
  npy::write(dir / "b" / "gradients.npy", Tensor({4, 2, 2}));
  edit_manifest(dir / "b", [](auto &j) { j["tensors"]["gradients"]["shape"] = {4, 2, 2}; });
  EXPECT_THROW(load_bundle(dir / "b"), ShapeError);
}

TEST(Bundle, DeclaredShapeDisagreesWithFile) {
  TempDir dir;
  save_bundle(make_bundle(2, 2, 2, 4, 4, 3, 0), dir / "b");
  edit_manifest(dir / "b", [](auto &j) { j["tensors"]["features"]["shape"] = {2, 4, 1}; });
  EXPECT_THROW(load_bundle(dir / "b"), ShapeError);
}

TEST(Bundle, NanInFeatures) {
  TempDir dir;
  auto b = make_bundle(2, 2, 2, 4, 4, 3, 0);
  save_bundle(b, dir / "b");
  b.features[3] = std::numeric_limits<float>::quiet_NaN();
  npy::write(dir / "b" / "features.npy", b.features);
  EXPECT_THROW(load_bundle(dir / "b"), NonFiniteData);
}

TEST(Bundle, EmptyFeatureStack) {
  auto b = make_bundle(2, 2, 2, 4, 4, 3, 0);
  b.features = Tensor({0, 2, 2});
  b.gradients = Tensor({0, 2, 2});
  EXPECT_THROW(validate_bundle(b), ShapeError);
  TempDir dir;
  EXPECT_THROW(save_bundle(b, dir / "b"), ShapeError);
}

TEST(Bundle, ClassIndexOutOfRange) {
  auto b = make_bundle(2, 2, 2, 4, 4, 3, 3);
  EXPECT_THROW(validate_bundle(b), ShapeError);
  b.class_index = -1;
  EXPECT_THROW(validate_bundle(b), ShapeError);
}

TEST(Bundle, ImageMustBeThreeChannel) {
  auto b = make_bundle(2, 2, 2, 4, 4, 3, 0);
  b.image = Tensor({1, 4, 4});
  EXPECT_THROW(validate_bundle(b), ShapeError);
}

TEST(Bundle, MissingComponents) {
  TempDir dir;
  EXPECT_THROW(load_bundle(dir / "nope"), MissingComponent);
  save_bundle(make_bundle(2, 2, 2, 4, 4, 3, 0), dir / "b");
  std::filesystem::remove(dir / "b" / "class_scores.npy");
  EXPECT_THROW(load_bundle(dir / "b"), MissingComponent);
  std::filesystem::remove(dir / "b" / "manifest.json");
  EXPECT_THROW(load_bundle(dir / "b"), MissingComponent);
}

TEST(Bundle, ManifestProblemsAreFormatErrors) {
  TempDir dir;
  save_bundle(make_bundle(2, 2, 2, 4, 4, 3, 0), dir / "b");
  edit_manifest(dir / "b", [](auto &j) { j["version"] = 2; });
  EXPECT_THROW(load_bundle(dir / "b"), FormatError);
  edit_manifest(dir / "b", [](auto &j) {
    j["version"] = 1;
    j.erase("class_index");
  });
  EXPECT_THROW(load_bundle(dir / "b"), FormatError);
  testing_support::write_text(dir / "b" / "manifest.json", "{ not json");
  EXPECT_THROW(load_bundle(dir / "b"), FormatError);
}

TEST(Bundle, NonFloatTensorIsFormatError) {
  TempDir dir;
  save_bundle(make_bundle(2, 2, 2, 4, 4, 3, 0), dir / "b");
  const auto src = testing_support::fixture("../fixtures/collection/img_a.bundle/features.npy");
  auto bytes = testing_support::read_text(dir / "b" / "image.npy");
  bytes.replace(bytes.find("<f4"), 3, "<f8");
  testing_support::write_text(dir / "b" / "image.npy", bytes);
  EXPECT_THROW(load_bundle(dir / "b"), FormatError);
}

TEST(Bundle, UnwritableDestination) {
  TempDir dir;
  testing_support::write_text(dir / "file", "x");
  EXPECT_THROW(save_bundle(make_bundle(2, 2, 2, 4, 4, 3, 0), dir / "file" / "b"), IoError);
}
