#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include "rcfd/error.hpp"
#include "rcfd/image.hpp"

namespace rcfd {

inline constexpr std::size_t kBlock = 8;
inline constexpr std::size_t kBlockArea = kBlock * kBlock;

using Block8 = std::array<double, kBlockArea>;

// 8x8 DCT coefficients, row-major, coeffs[0] is DC.
struct DctBlock {
  Block8 coeffs{};

  double operator()(std::size_t u, std::size_t v) const { return coeffs[u * kBlock + v]; }
  bool operator==(const DctBlock&) const = default;
};

struct QuantTable {
  std::array<int, kBlockArea> entries{};
  int quality = 50;
};

namespace detail {

// basis[u][x] = a(u) cos((2x + 1) u pi / 16), orthonormal.
inline const std::array<std::array<double, kBlock>, kBlock>& dct_basis() {
  static const auto table = [] {
    std::array<std::array<double, kBlock>, kBlock> t{};
    for (std::size_t u = 0; u < kBlock; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (std::size_t x = 0; x < kBlock; ++x)
        t[u][x] = a * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                               std::numbers::pi / 16.0);
    }
    return t;
  }();
  return table;
}

inline void check_block_size(std::size_t n, const char* what) {
  if (n != kBlockArea)
    throw InvalidInput(std::string(what) + ": expected 64 values (8x8), got " + std::to_string(n));
}

inline void dct8_into(std::span<const double> in, Block8& out) {
  const auto& c = dct_basis();
  Block8 tmp;
  // rows: tmp[x][v] = sum_y in[x][y] c[v][y]
  for (std::size_t x = 0; x < kBlock; ++x)
    for (std::size_t v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (std::size_t y = 0; y < kBlock; ++y) s += in[x * kBlock + y] * c[v][y];
      tmp[x * kBlock + v] = s;
    }
  for (std::size_t u = 0; u < kBlock; ++u)
    for (std::size_t v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (std::size_t x = 0; x < kBlock; ++x) s += c[u][x] * tmp[x * kBlock + v];
      out[u * kBlock + v] = s;
    }
}

inline void idct8_into(std::span<const double> in, Block8& out) {
  const auto& c = dct_basis();
  Block8 tmp;
  for (std::size_t u = 0; u < kBlock; ++u)
    for (std::size_t y = 0; y < kBlock; ++y) {
      double s = 0.0;
      for (std::size_t v = 0; v < kBlock; ++v) s += in[u * kBlock + v] * c[v][y];
      tmp[u * kBlock + y] = s;
    }
  for (std::size_t x = 0; x < kBlock; ++x)
    for (std::size_t y = 0; y < kBlock; ++y) {
      double s = 0.0;
      for (std::size_t u = 0; u < kBlock; ++u) s += c[u][x] * tmp[u * kBlock + y];
      out[x * kBlock + y] = s;
    }
}

}  // namespace detail

// Orthonormal 2-D DCT-II of a row-major 8x8 block.
inline DctBlock dct8(std::span<const double> block) {
  detail::check_block_size(block.size(), "dct8");
  DctBlock out;
  detail::dct8_into(block, out.coeffs);
  return out;
}

inline Block8 idct8(std::span<const double> coeffs) {
  detail::check_block_size(coeffs.size(), "idct8");
  Block8 out;
  detail::idct8_into(coeffs, out);
  return out;
}

inline Block8 idct8(const DctBlock& block) { return idct8(std::span<const double>(block.coeffs)); }

// Annex K luminance table, row-major.
inline constexpr std::array<int, kBlockArea> kBaseLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// IJG quality scaling of the base luminance table.
inline QuantTable quant_table(int quality) {
  if (quality < 1 || quality > 100)
    throw InvalidInput("quality must be in [1, 100], got " + std::to_string(quality));
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable t;
  t.quality = quality;
  for (std::size_t i = 0; i < kBlockArea; ++i)
    t.entries[i] = std::clamp((kBaseLuminanceTable[i] * scale + 50) / 100, 1, 255);
  return t;
}

// Pixel-domain JPEG round trip at `quality`: per 8x8 block level shift, DCT,
// quantize (half away from zero), dequantize, IDCT, shift back, round to
// integer intensities, clamp. Dimensions that are not multiples of 8 are
// edge-replicated for the transform and cropped back.
inline GrayImage compress(const GrayImage& image, int quality) {
  const QuantTable table = quant_table(quality);
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  if (w == 0 || h == 0) throw InvalidInput("compress: empty image");
  GrayImage out(w, h);
  Block8 px;
  Block8 coef;
  Block8 rec;
  for (std::size_t br = 0; br < h; br += kBlock) {
    for (std::size_t bc = 0; bc < w; bc += kBlock) {
      for (std::size_t x = 0; x < kBlock; ++x)
        for (std::size_t y = 0; y < kBlock; ++y)
          px[x * kBlock + y] = image(std::min(br + x, h - 1), std::min(bc + y, w - 1)) - 128.0;
      detail::dct8_into(px, coef);
      for (std::size_t i = 0; i < kBlockArea; ++i) {
        const double q = table.entries[i];
        coef[i] = round_half_away(coef[i] / q) * q;
      }
      detail::idct8_into(coef, rec);
      for (std::size_t x = 0; x < kBlock && br + x < h; ++x)
        for (std::size_t y = 0; y < kBlock && bc + y < w; ++y)
          out(br + x, bc + y) = clamp_intensity(round_half_away(rec[x * kBlock + y] + 128.0));
    }
  }
  return out;
}

inline GrayImage double_compress(const GrayImage& image, int q1, int q2) {
  return compress(compress(image, q1), q2);
}

}  // namespace rcfd
