#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace camkit;
using testing_support::TempDir;

namespace {

std::vector<unsigned char> bytes_of(const std::string &s) { return {s.begin(), s.end()}; }

std::vector<unsigned char> with_header(const std::string &dict, std::size_t payload_floats,
                                       unsigned char major = 1) {
  std::string header = dict;
  const std::size_t pre = major == 1 ? 10 : 12;
  while ((pre + header.size() + 1) % 64)
    header += ' ';
  header += '\n';
  std::vector<unsigned char> out = {0x93, 'N', 'U', 'M', 'P', 'Y', major, 0};
  const auto len = header.size();
  out.push_back(len & 0xFF);
  out.push_back((len >> 8) & 0xFF);
  if (major == 2) {
    out.push_back(0);
    out.push_back(0);
  }
  out.insert(out.end(), header.begin(), header.end());
  for (std::size_t i = 0; i < payload_floats; ++i) {
    const float v = float(i) + 0.5f;
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
  }
  return out;
}

} // namespace

TEST(Tensor, ShapeAndIndexing) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.size(), 24u);
  t.at(1, 2, 3) = 5.0f;
  EXPECT_EQ(t[23], 5.0f);
  EXPECT_EQ(t.slice(1).size(), 12u);
  EXPECT_EQ(t.slice(1)[11], 5.0f);
  EXPECT_EQ(shape_string(t.shape()), "(2x3x4)");
}

TEST(Tensor, RejectsDataSizeMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, FiniteCheck) {
  Tensor t({2}, std::vector<float>{1, 2});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  t[1] = std::numeric_limits<float>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Npy, HeaderIsAlignedAndNumpyFormatted) {
  const auto h = npy::format_header({3, 224, 224});
  EXPECT_EQ((10 + h.size()) % 64, 0u);
  EXPECT_EQ(h.back(), '\n');
  EXPECT_EQ(h.rfind("{'descr': '<f4', 'fortran_order': False, 'shape': (3, 224, 224), }", 0),
            0u);
  EXPECT_NE(npy::format_header({5}).find("'shape': (5,)"), std::string::npos);
  EXPECT_NE(npy::format_header({}).find("'shape': ()"), std::string::npos);
}

TEST(Npy, RoundTripInMemory) {
  const Tensor t({2, 3}, {1.5f, -2, 0, 3.25f, 1e-30f, -7});
  EXPECT_EQ(npy::decode(npy::encode(t)), t);
}

TEST(Npy, RoundTripThroughFile) {
  TempDir dir;
  const Tensor t({4, 1, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  npy::write(dir / "t.npy", t);
  EXPECT_EQ(npy::read(dir / "t.npy"), t);
}

TEST(Npy, ReencodingNumpyFilesIsByteIdentical) {
  const auto path = testing_support::fixture("collection/img_a.bundle/features.npy");
  const auto original = bytes_of(testing_support::read_text(path));
  EXPECT_EQ(npy::encode(npy::read(path)), original);
}

TEST(Npy, AcceptsVersion2Header) {
  const auto b = with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", 4, 2);
  const Tensor t = npy::decode(b);
  EXPECT_EQ(t.shape(), (Shape{2, 2}));
  EXPECT_EQ(t[3], 3.5f);
}

TEST(Npy, AcceptsReorderedKeysAndLooseWhitespace) {
  const auto b = with_header("{ 'shape':(3,) ,'fortran_order':False,'descr':'<f4' }", 3);
  EXPECT_EQ(npy::decode(b).shape(), (Shape{3}));
}

TEST(Npy, RejectsOtherDtypes) {
  for (const char *descr : {"<f8", ">f4", "<i4", "|u1"}) {
    const auto b = with_header(std::string("{'descr': '") + descr +
                                   "', 'fortran_order': False, 'shape': (1,), }",
                               1);
    EXPECT_THROW(npy::decode(b), FormatError) << descr;
  }
}

TEST(Npy, RejectsFortranOrder) {
  const auto b = with_header("{'descr': '<f4', 'fortran_order': True, 'shape': (2, 2), }", 4);
  EXPECT_THROW(npy::decode(b), FormatError);
}

TEST(Npy, RejectsPayloadSizeMismatch) {
  const auto b = with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", 3);
  EXPECT_THROW(npy::decode(b), FormatError);
}

TEST(Npy, RejectsGarbage) {
  EXPECT_THROW(npy::decode(bytes_of("not a numpy file at all")), FormatError);
  EXPECT_THROW(npy::decode(bytes_of("")), FormatError);
  const auto b = with_header("{'descr': '<f4', 'shape': (2, 2), }", 4);
  EXPECT_THROW(npy::decode(b), FormatError);
}

TEST(Npy, MissingFile) {
  EXPECT_THROW(npy::read("/nonexistent/camkit/x.npy"), MissingComponent);
}

TEST(Npy, UnwritablePath) {
  EXPECT_THROW(npy::write("/nonexistent/camkit/x.npy", Tensor({1})), IoError);
}
