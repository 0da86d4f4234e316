#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "rcfd/codec.hpp"
#include "rcfd/random.hpp"
#include "rcfd/tamper.hpp"

using namespace rcfd;

namespace {

Block8 random_block(Rng& rng) {
  Block8 b;
  for (auto& v : b) v = rng.uniform(-128.0, 128.0);
  return b;
}

}  // namespace

TEST(Dct, ConstantBlockHasOnlyDc) {
  Block8 b;
  b.fill(128.0);
  const DctBlock d = dct8(b);
  EXPECT_NEAR(d.coeffs[0], 1024.0, 1e-9);
  for (std::size_t i = 1; i < 64; ++i) EXPECT_NEAR(d.coeffs[i], 0.0, 1e-9);
}

TEST(Dct, MatchesDoubleSum) {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const Block8 b = random_block(rng);
    const auto want = oracle::dct(b.data());
    const DctBlock got = dct8(b);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(got.coeffs[i], want[i], 1e-9);
  }
}

TEST(Dct, RoundTrip) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const Block8 b = random_block(rng);
    const Block8 back = idct8(dct8(b));
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[i], b[i], 1e-9);
  }
}

TEST(Dct, RejectsWrongSize) {
  std::vector<double> v(63, 0.0);
  EXPECT_THROW(dct8(v), InvalidInput);
  EXPECT_THROW(idct8(std::span<const double>(v)), InvalidInput);
}

TEST(QuantTable, Quality50IsBaseTable) {
  const QuantTable t = quant_table(50);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(t.entries[i], kBaseLuminanceTable[i]);
  EXPECT_EQ(t.entries[0], 16);
  EXPECT_EQ(t.entries[63], 99);
}

TEST(QuantTable, Quality100IsAllOnes) {
  for (int e : quant_table(100).entries) EXPECT_EQ(e, 1);
}

TEST(QuantTable, Quality75) {
  const QuantTable t = quant_table(75);
  EXPECT_EQ(t.entries[0], 8);
  EXPECT_EQ(t.entries[1], 6);
  EXPECT_EQ(t.entries[63], 50);
}

TEST(QuantTable, EntriesShrinkWithQuality) {
  for (int q = 1; q < 100; ++q) {
    const auto a = quant_table(q);
    const auto b = quant_table(q + 1);
    for (std::size_t i = 0; i < 64; ++i) {
      EXPECT_GE(a.entries[i], b.entries[i]);
      EXPECT_GE(b.entries[i], 1);
      EXPECT_LE(a.entries[i], 255);
    }
  }
}

TEST(QuantTable, RejectsOutOfRange) {
  EXPECT_THROW(quant_table(0), InvalidInput);
  EXPECT_THROW(quant_table(101), InvalidInput);
}

TEST(Compress, KeepsShapeAndRange) {
  const GrayImage img = oracle::random_image(37, 21, 5);
  for (int q : {1, 30, 55, 95, 100}) {
    const GrayImage out = compress(img, q);
    ASSERT_EQ(out.width(), 37u);
    ASSERT_EQ(out.height(), 21u);
    for (double v : out.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 255.0);
      EXPECT_EQ(v, std::round(v));
    }
  }
}

TEST(Compress, ConstantMidGrayIsFixedPoint) {
  const GrayImage img(16, 16, 128.0);
  EXPECT_EQ(compress(img, 55), img);
  EXPECT_EQ(double_compress(img, 85, 55), img);
}

TEST(Compress, RecompressionDriftsAtMostOne) {
  // Unclipped content: measured worst drift is exactly 1 (q 95, 100), 0 below.
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = synthetic_texture(64, 64, seed);
    for (int q : {10, 55, 75, 85, 95, 100}) {
      const GrayImage once = compress(img, q);
      const GrayImage twice = compress(once, q);
      for (std::size_t i = 0; i < once.size(); ++i)
        worst = std::max(worst, std::abs(once.pixels()[i] - twice.pixels()[i]));
    }
  }
  EXPECT_LE(worst, 1.0);
}

TEST(Compress, ClippingBreaksIdempotence) {
  // Uniform noise saturates at 0/255 after decoding, so recompression moves
  // far more than one level. Measured: 10 at q75, 1 at q100.
  const GrayImage img = oracle::random_image(64, 64, 6);
  auto drift = [&](int q) {
    const GrayImage once = compress(img, q);
    const GrayImage twice = compress(once, q);
    double w = 0.0;
    for (std::size_t i = 0; i < once.size(); ++i) w = std::max(w, std::abs(once.pixels()[i] - twice.pixels()[i]));
    return w;
  };
  EXPECT_GT(drift(75), 1.0);
  EXPECT_LE(drift(75), 10.0);
  EXPECT_LE(drift(100), 1.0);
}

TEST(Compress, HigherQualityIsCloser) {
  const GrayImage img = oracle::random_image(64, 64, 7);
  auto mse = [&](const GrayImage& o) {
    double s = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) s += std::pow(o.pixels()[i] - img.pixels()[i], 2);
    return s / static_cast<double>(img.size());
  };
  EXPECT_LT(mse(compress(img, 95)), mse(compress(img, 55)));
}

TEST(Compress, DoubleIsSequential) {
  const GrayImage img = oracle::random_image(24, 40, 8);
  EXPECT_EQ(double_compress(img, 85, 55), compress(compress(img, 85), 55));
}

TEST(Compress, EmptyImageRejected) {
  EXPECT_THROW(compress(GrayImage(), 50), InvalidInput);
}

TEST(Pnm, RoundTrip) {
  const GrayImage img = oracle::random_image(13, 9, 9);
  EXPECT_EQ(decode_pnm(encode_pgm(img)), img);
}

TEST(Pnm, ColorToLuminance) {
  std::string ppm = "P6\n# c\n2 1\n255\n";
  ppm += std::string("\xff\x00\x00\x00\x00\xff", 6);
  const GrayImage g = decode_pnm(ppm);
  EXPECT_EQ(g(0, 0), std::round(0.299 * 255));
  EXPECT_EQ(g(0, 1), std::round(0.114 * 255));
}

TEST(Pnm, RejectsGarbage) {
  EXPECT_THROW(decode_pnm("P2\n1 1\n255\n0"), InvalidInput);
  EXPECT_THROW(decode_pnm("P5\n4 4\n255\nab"), InvalidInput);
}
