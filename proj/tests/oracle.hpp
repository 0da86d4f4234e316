#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's transform or feature code.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rcfd/image.hpp"
#include "rcfd/random.hpp"

namespace oracle {

// Definitional 2-D DCT-II double sum, accumulated in long double.
inline std::array<double, 64> dct(const double* px) {
  constexpr long double pi = std::numbers::pi_v<long double>;
  std::array<double, 64> out{};
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      const long double au = u == 0 ? std::sqrt(0.125L) : 0.5L;
      const long double av = v == 0 ? std::sqrt(0.125L) : 0.5L;
      long double s = 0.0L;
      for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
          s += px[x * 8 + y] * std::cos((2 * x + 1) * u * pi / 16.0L) * std::cos((2 * y + 1) * v * pi / 16.0L);
      out[u * 8 + v] = static_cast<double>(au * av * s);
    }
  return out;
}

// Zigzag walk by explicit direction changes (1-based index k -> (u, v)).
inline std::vector<std::pair<int, int>> zigzag_walk() {
  std::vector<std::pair<int, int>> z;
  int u = 0, v = 0;
  bool up = true;
  while (z.size() < 64) {
    z.push_back({u, v});
    if (up) {
      if (v == 7) { ++u; up = false; }
      else if (u == 0) { ++v; up = false; }
      else { --u; ++v; }
    } else {
      if (u == 7) { ++v; up = true; }
      else if (v == 0) { ++u; up = true; }
      else { ++u; --v; }
    }
  }
  return z;
}

// Features of one 32x32 window given as 1024 row-major pixels.
inline std::vector<double> window_features(const double* w) {
  const auto zz = zigzag_walk();
  double coef[16][19];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double blk[64];
      for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) blk[x * 8 + y] = w[(i * 8 + x) * 32 + j * 8 + y];
      const auto d = dct(blk);
      for (int c = 2; c <= 20; ++c) {
        const auto [u, v] = zz[c - 1];
        coef[i * 4 + j][c - 2] = d[u * 8 + v];
      }
    }
  std::vector<double> out;
  for (int c = 0; c < 19; ++c) {
    int best = 0;
    for (int b = 1; b < 16; ++b)
      if (coef[b][c] > coef[best][c]) best = b;
    const int start = std::clamp(best - 3, 0, 9);
    for (int k = 0; k < 7; ++k) out.push_back(coef[start + k][c]);
  }
  return out;
}

// Whole-image features, windows taken from the zero-padded image.
inline std::vector<double> image_features(const rcfd::GrayImage& img) {
  const int M = static_cast<int>(img.height());
  const int N = static_cast<int>(img.width());
  const int nh = (M - 32 + 7) / 8 + 1;
  const int nv = (N - 32 + 7) / 8 + 1;
  std::vector<double> out;
  std::vector<double> w(1024);
  for (int a = 0; a < nh; ++a)
    for (int b = 0; b < nv; ++b) {
      for (int x = 0; x < 32; ++x)
        for (int y = 0; y < 32; ++y) {
          const int r = a * 8 + x, c = b * 8 + y;
          w[x * 32 + y] = (r < M && c < N) ? img(r, c) : 0.0;
        }
      const auto f = window_features(w.data());
      out.insert(out.end(), f.begin(), f.end());
    }
  return out;
}

inline rcfd::GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  rcfd::Rng rng(seed);
  std::vector<double> px(w * h);
  for (auto& p : px) p = static_cast<double>(rng.below(256));
  return rcfd::GrayImage(w, h, std::move(px));
}

}  // namespace oracle
