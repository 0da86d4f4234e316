#include <gtest/gtest.h>

#include <filesystem>

#include "oracle.hpp"
#include "rcfd/tamper.hpp"

using namespace rcfd;

TEST(TamperRect, SizeFollowsFraction) {
  const TamperRect r = tamper_rect_size(384, 512, 0.5);
  EXPECT_EQ(r.h, 272u);
  EXPECT_EQ(r.w, 360u);
  const TamperRect s = tamper_rect_size(128, 128, 0.3);
  EXPECT_EQ(s.h, 72u);
  EXPECT_EQ(s.w, 72u);
}

TEST(TamperRect, TinyFractionKeepsOneUnit) {
  const TamperRect r = tamper_rect_size(64, 64, 1e-6);
  EXPECT_EQ(r.h, 8u);
  EXPECT_EQ(r.w, 8u);
}

TEST(TamperRect, RejectsBadFraction) {
  EXPECT_THROW(tamper_rect_size(64, 64, 0.0), InvalidInput);
  EXPECT_THROW(tamper_rect_size(64, 64, 1.0), InvalidInput);
  EXPECT_THROW(tamper_rect_size(64, 64, 0.999), InvalidInput);
}

TEST(TamperRect, PlacementOnGridAndInside) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TamperRect r = place_tamper_rect(100, 130, 0.2, seed);
    EXPECT_EQ(r.x0 % 8, 0u);
    EXPECT_EQ(r.y0 % 8, 0u);
    EXPECT_LE(r.y0 + r.h, 96u);
    EXPECT_LE(r.x0 + r.w, 128u);
  }
}

TEST(TamperRect, PlacementIsSeeded) {
  EXPECT_EQ(place_tamper_rect(384, 512, 0.1, 42), place_tamper_rect(384, 512, 0.1, 42));
  bool moved = false;
  for (std::uint64_t s = 1; s < 10; ++s) moved |= !(place_tamper_rect(384, 512, 0.1, 0) == place_tamper_rect(384, 512, 0.1, s));
  EXPECT_TRUE(moved);
}

TEST(UnitMaskTest, AlignedRectangle) {
  const TamperRect r{16, 8, 24, 16};
  const auto m = unit_mask(40, 64, r);
  ASSERT_EQ(m.rows(), 5u);
  ASSERT_EQ(m.cols(), 8u);
  EXPECT_EQ(m.count(), 6u);
  for (std::size_t ur = 0; ur < 5; ++ur)
    for (std::size_t uc = 0; uc < 8; ++uc)
      EXPECT_EQ(m(ur, uc) != 0, ur >= 1 && ur < 3 && uc >= 2 && uc < 5);
}

TEST(UnitMaskTest, PartialEdgeUnitsUseHalfRule) {
  // 20x20 image: last unit row/col is 4 pixels wide.
  const TamperRect r{0, 0, 16, 16};
  const auto m = unit_mask(20, 20, r);
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.count(), 4u);
  const TamperRect r2{8, 8, 12, 12};
  EXPECT_EQ(unit_mask(20, 20, r2).count(), 4u);
}

TEST(MakeForged, DiffersOnlyInsideRectangle) {
  const GrayImage src = synthetic_texture(96, 80, 3);
  const ForgedImage f = make_forged(src, 85, 55, 0.25, 9);
  const GrayImage single = compress(src, 85);
  const GrayImage dual = compress(single, 55);
  std::size_t changed = 0;
  for (std::size_t r = 0; r < src.height(); ++r)
    for (std::size_t c = 0; c < src.width(); ++c) {
      if (f.rect.contains(r, c)) {
        EXPECT_EQ(f.image(r, c), dual(r, c));
        changed += f.image(r, c) != single(r, c);
      } else {
        EXPECT_EQ(f.image(r, c), single(r, c));
      }
    }
  EXPECT_GT(changed, 0u);
  EXPECT_EQ(f.mask, unit_mask(80, 96, f.rect));
  EXPECT_EQ(f.mask.count(), f.rect.area() / 64);
}

TEST(MakeForged, Deterministic) {
  const GrayImage src = synthetic_texture(64, 64, 4);
  const ForgedImage a = make_forged(src, 55, 95, 0.3, 1);
  const ForgedImage b = make_forged(src, 55, 95, 0.3, 1);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.rect, b.rect);
}

TEST(SynthCorpus, PairsAreSingleAndDouble) {
  const std::vector<GrayImage> imgs{synthetic_texture(32, 40, 1), synthetic_texture(48, 32, 2)};
  const Corpus c = synth_corpus(imgs, 85, 55);
  ASSERT_EQ(c.single.size(), 2u);
  ASSERT_EQ(c.dual.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(c.single[i], compress(imgs[i], 85));
    EXPECT_EQ(c.dual[i], double_compress(imgs[i], 85, 55));
  }
}

TEST(SynthCorpus, RejectsEmptyAndBadQuality) {
  EXPECT_THROW(synth_corpus({}, 55, 95), InvalidInput);
  EXPECT_THROW(synth_corpus({GrayImage(8, 8, 1.0)}, 0, 95), InvalidInput);
}

TEST(Texture, SeededAndInRange) {
  const GrayImage a = synthetic_texture(50, 30, 77);
  EXPECT_EQ(a, synthetic_texture(50, 30, 77));
  EXPECT_NE(a, synthetic_texture(50, 30, 78));
  double lo = 255, hi = 0;
  for (double v : a.pixels()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    EXPECT_EQ(v, std::round(v));
  }
  EXPECT_GT(hi - lo, 10.0);
}

TEST(CorpusManifest, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "rcfd_test_corpus.tsv";
  std::vector<CorpusRecord> recs(2);
  recs[0] = {"a", "sources/a.pgm", 55, 95, 0.3, 7, {8, 16, 24, 32}, "forged/a.pgm", "masks/a.pgm"};
  recs[1] = {"b", "sources/b.pgm", 85, 55, 0.1, 8, {0, 0, 8, 8}, "forged/b.pgm", "masks/b.pgm"};
  write_corpus_manifest(path, recs);
  EXPECT_EQ(read_corpus_manifest(path), recs);
  write_file(path, "a\tb\n");
  EXPECT_THROW(read_corpus_manifest(path), InvalidInput);
  std::filesystem::remove(path);
}
