#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "lsld/array_io.hpp"
#include "lsld/error.hpp"
#include "test_util.hpp"

namespace {

using lsld::Array;
using lsld::FormatError;

Array random_array(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rank_dist(0, 4);
  std::uniform_int_distribution<std::uint32_t> dim_dist(0, 6);
  Array a;
  a.shape.resize(static_cast<std::size_t>(rank_dist(rng)));
  for (auto& d : a.shape) d = dim_dist(rng);
  a.data.resize(a.element_count());
  // Random bit patterns cover denormals and signed zeros; NaN/Inf are redrawn.
  for (auto& x : a.data) {
    do {
      x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
    } while (!std::isfinite(x));
  }
  return a;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST(ArrayIo, RoundTripIsBitExact) {
  lsld::testing::TempDir dir;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Array a = random_array(rng);
    const auto path = dir / ("a" + std::to_string(i % 10) + ".bin");
    lsld::write_array(path, a);
    const Array b = lsld::read_array(path);
    ASSERT_EQ(a.shape, b.shape) << "trial " << i;
    ASSERT_TRUE(bit_equal(a.data, b.data)) << "trial " << i;
  }
}

TEST(ArrayIo, HeaderLayout) {
  const std::vector<std::uint32_t> shape = {2, 3};
  const std::vector<float> data = {1, 2, 3, 4, 5, 6};
  const auto bytes = lsld::encode_array(shape, data);
  ASSERT_EQ(bytes.size(), 8u + 4u + 8u + 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "LSLDARR1");
  EXPECT_EQ(bytes[8], 2);  // rank, little endian
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(bytes[16], 3);
  float first;
  std::memcpy(&first, bytes.data() + 20, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(ArrayIo, RejectsBadMagic) {
  auto bytes = lsld::encode_array(std::vector<std::uint32_t>{1}, std::vector<float>{1.0f});
  bytes[0] = 'X';
  EXPECT_THROW(lsld::decode_array(bytes), FormatError);
}

TEST(ArrayIo, RejectsTruncation) {
  const auto bytes =
      lsld::encode_array(std::vector<std::uint32_t>{4}, std::vector<float>{1, 2, 3, 4});
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(n));
    EXPECT_THROW(lsld::decode_array(cut), FormatError) << "length " << n;
  }
}

TEST(ArrayIo, RejectsTrailingBytes) {
  auto bytes = lsld::encode_array(std::vector<std::uint32_t>{2}, std::vector<float>{1, 2});
  bytes.push_back(0);
  try {
    lsld::decode_array(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
}

TEST(ArrayIo, RejectsRankAboveFour) {
  auto bytes = lsld::encode_array(std::vector<std::uint32_t>{1}, std::vector<float>{1});
  bytes[8] = 5;
  EXPECT_THROW(lsld::decode_array(bytes), FormatError);
}

TEST(ArrayIo, RejectsNonFinite) {
  const std::vector<std::uint32_t> shape = {1};
  const std::vector<float> nan = {std::numeric_limits<float>::quiet_NaN()};
  lsld::testing::TempDir dir;
  EXPECT_THROW(lsld::write_array(dir / "nan.bin", shape, nan), lsld::Error);
}

TEST(ArrayIo, ShapeDataMismatchIsValidationError) {
  lsld::testing::TempDir dir;
  EXPECT_THROW(lsld::write_array(dir / "x.bin", std::vector<std::uint32_t>{3},
                                 std::vector<float>{1, 2}),
               lsld::ValidationError);
}

TEST(ArrayIo, MissingFile) {
  EXPECT_THROW(lsld::read_array("/nonexistent/lsld/array.bin"), FormatError);
}

}  // namespace
