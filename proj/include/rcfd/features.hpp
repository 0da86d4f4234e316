#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rcfd/codec.hpp"
#include "rcfd/error.hpp"
#include "rcfd/grid.hpp"
#include "rcfd/image.hpp"
#include "rcfd/parallel.hpp"

namespace rcfd {

inline constexpr std::size_t kWindow = 32;
inline constexpr std::size_t kStride = 8;
inline constexpr std::size_t kSubBlocks = 16;    // 4x4 DCT blocks per window
inline constexpr std::size_t kFirstCoeff = 2;    // 1-based zigzag index
inline constexpr std::size_t kLastCoeff = 20;
inline constexpr std::size_t kCoeffRows = kLastCoeff - kFirstCoeff + 1;  // 19
inline constexpr std::size_t kNeighborhood = 7;
inline constexpr std::size_t kFeatureLen = kCoeffRows * kNeighborhood;  // 133

struct Anchor {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Anchor&) const = default;
};

// ---------------------------------------------------------------------------
// Zigzag

namespace detail {

inline constexpr std::array<std::pair<std::size_t, std::size_t>, kBlockArea> make_zigzag() {
  std::array<std::pair<std::size_t, std::size_t>, kBlockArea> out{};
  std::size_t k = 0;
  for (std::size_t s = 0; s < 2 * kBlock - 1; ++s) {
    // even diagonals run bottom-left -> top-right, odd ones the other way
    const std::size_t lo = s < kBlock ? 0 : s - (kBlock - 1);
    const std::size_t hi = s < kBlock ? s : kBlock - 1;
    for (std::size_t i = lo; i <= hi; ++i) {
      const std::size_t row = (s % 2 == 0) ? s - i : i;
      out[k++] = {row, s - row};
    }
  }
  return out;
}

inline constexpr auto kZigzag = make_zigzag();

}  // namespace detail

// 1-based zigzag index -> (row, col) in the 8x8 coefficient block.
inline std::pair<std::size_t, std::size_t> zigzag(std::size_t index) {
  if (index < 1 || index > kBlockArea)
    throw InvalidInput("zigzag index must be in [1, 64], got " + std::to_string(index));
  return detail::kZigzag[index - 1];
}

// ---------------------------------------------------------------------------
// Window grid

struct BlockGrid {
  std::size_t window = kWindow;
  std::size_t stride = kStride;
  std::size_t n_hor = 0;  // anchors along rows (image height M)
  std::size_t n_ver = 0;  // anchors along columns (image width N)
  std::vector<Anchor> anchors;

  std::size_t count() const noexcept { return n_hor * n_ver; }
};

// ceil((dim - W) / S) + 1 anchors per axis.
inline std::size_t anchor_count(std::size_t dim) { return ceil_div(dim - kWindow, kStride) + 1; }

// M = height, N = width. Anchors are row-major, rows outer.
inline BlockGrid block_grid(std::size_t height, std::size_t width) {
  if (height < kWindow || width < kWindow)
    throw InvalidInput("image must be at least 32x32, got " + std::to_string(height) + "x" +
                       std::to_string(width));
  BlockGrid g;
  g.n_hor = anchor_count(height);
  g.n_ver = anchor_count(width);
  g.anchors.reserve(g.count());
  for (std::size_t i = 0; i < g.n_hor; ++i)
    for (std::size_t j = 0; j < g.n_ver; ++j) g.anchors.push_back({i * kStride, j * kStride});
  return g;
}

// ---------------------------------------------------------------------------
// Per-window features

struct FeatureBlock {
  // Row (c - 2) holds the 7-block neighborhood of zigzag coefficient c.
  std::array<double, kFeatureLen> values{};
  Anchor anchor;

  double operator()(std::size_t row, std::size_t k) const { return values[row * kNeighborhood + k]; }
};

// The 19 selected zigzag coefficients of one 8x8 DCT block.
using CoeffVector = std::array<double, kCoeffRows>;

inline CoeffVector selected_coeffs(std::span<const double> block) {
  Block8 dct;
  detail::dct8_into(block, dct);
  CoeffVector out;
  for (std::size_t c = kFirstCoeff; c <= kLastCoeff; ++c) {
    const auto [u, v] = detail::kZigzag[c - 1];
    out[c - kFirstCoeff] = dct[u * kBlock + v];
  }
  return out;
}

// Neighborhood selection over 16 sub-block coefficient vectors (row-major
// sub-block order). The first index attaining the maximum wins; the 7-wide
// window around it is shifted to stay inside [0, 16).
inline void select_neighborhoods(std::span<const CoeffVector, kSubBlocks> sub, FeatureBlock& out) {
  for (std::size_t c = 0; c < kCoeffRows; ++c) {
    std::size_t max_pos = 0;
    double max = sub[0][c];
    for (std::size_t b = 1; b < kSubBlocks; ++b) {
      if (sub[b][c] > max) {
        max = sub[b][c];
        max_pos = b;
      }
    }
    const std::size_t start = std::min(max_pos < 3 ? 0 : max_pos - 3, kSubBlocks - kNeighborhood);
    for (std::size_t k = 0; k < kNeighborhood; ++k)
      out.values[c * kNeighborhood + k] = sub[start + k][c];
  }
}

// Features of one 32x32 window given row-major pixels.
inline FeatureBlock block_features(std::span<const double> window) {
  if (window.size() != kWindow * kWindow)
    throw InvalidInput("block_features: expected 32x32 = 1024 values, got " +
                       std::to_string(window.size()));
  std::array<CoeffVector, kSubBlocks> sub;
  Block8 px;
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t q = 0; q < 4; ++q) {
      for (std::size_t x = 0; x < kBlock; ++x)
        for (std::size_t y = 0; y < kBlock; ++y)
          px[x * kBlock + y] = window[(p * kBlock + x) * kWindow + q * kBlock + y];
      sub[p * 4 + q] = selected_coeffs(px);
    }
  FeatureBlock out;
  select_neighborhoods(sub, out);
  return out;
}

inline FeatureBlock block_features(const GrayImage& window) {
  if (window.width() != kWindow || window.height() != kWindow)
    throw InvalidInput("block_features: window must be 32x32");
  return block_features(window.pixels());
}

// ---------------------------------------------------------------------------
// Whole-image features

struct FeatureMatrix {
  std::size_t rows = 0;
  std::vector<double> values;  // rows x 133, row-major
  std::vector<Anchor> anchors;
  std::optional<std::vector<std::uint8_t>> labels;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * kFeatureLen, kFeatureLen);
  }
};

// Selected coefficients for every 8x8 cell of the zero-padded image, so each
// sub-block DCT is computed once and shared by the up to 16 windows using it.
// Windows are grid aligned, so this is the same arithmetic as block_features.
class CellCoefficients {
 public:
  CellCoefficients(const GrayImage& image, std::size_t cell_rows, std::size_t cell_cols,
                   std::size_t workers = worker_count())
      : rows_(cell_rows), cols_(cell_cols), cells_(cell_rows * cell_cols) {
    parallel_for(
        rows_,
        [&](std::size_t cr) {
          Block8 px;
          for (std::size_t cc = 0; cc < cols_; ++cc) {
            for (std::size_t x = 0; x < kBlock; ++x)
              for (std::size_t y = 0; y < kBlock; ++y) {
                const std::size_t r = cr * kBlock + x;
                const std::size_t c = cc * kBlock + y;
                px[x * kBlock + y] = (r < image.height() && c < image.width()) ? image(r, c) : 0.0;
              }
            cells_[cr * cols_ + cc] = selected_coeffs(px);
          }
        },
        workers);
  }

  FeatureBlock window(Anchor a) const {
    std::array<CoeffVector, kSubBlocks> sub;
    const std::size_t r0 = a.row / kBlock;
    const std::size_t c0 = a.col / kBlock;
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t q = 0; q < 4; ++q) sub[p * 4 + q] = cells_[(r0 + p) * cols_ + c0 + q];
    FeatureBlock out;
    out.anchor = a;
    select_neighborhoods(sub, out);
    return out;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<CoeffVector> cells_;
};

// Features for every anchor in `anchors` (all must be multiples of 8), over
// the image zero-padded at the bottom/right as far as the windows need.
inline FeatureMatrix features_at(const GrayImage& image, const std::vector<Anchor>& anchors,
                                 std::size_t workers = worker_count()) {
  std::size_t need_rows = 0;
  std::size_t need_cols = 0;
  for (const auto& a : anchors) {
    if (a.row % kStride != 0 || a.col % kStride != 0)
      throw InvalidInput("features_at: anchors must lie on the 8-pixel grid");
    need_rows = std::max(need_rows, (a.row + kWindow) / kBlock);
    need_cols = std::max(need_cols, (a.col + kWindow) / kBlock);
  }
  const CellCoefficients cells(image, need_rows, need_cols, workers);
  FeatureMatrix f;
  f.rows = anchors.size();
  f.anchors = anchors;
  f.values.resize(f.rows * kFeatureLen);
  parallel_for(
      f.rows,
      [&](std::size_t i) {
        const FeatureBlock b = cells.window(anchors[i]);
        std::copy(b.values.begin(), b.values.end(), f.values.begin() + static_cast<std::ptrdiff_t>(i * kFeatureLen));
      },
      workers);
  return f;
}

inline FeatureMatrix image_features(const GrayImage& image, std::size_t workers = worker_count()) {
  const BlockGrid grid = block_grid(image.height(), image.width());
  return features_at(image, grid.anchors, workers);
}

// ---------------------------------------------------------------------------
// Feature file: "RCFD-FEAT 1 <rows> 133 <label-flag>\n" then per row 133
// little-endian f64 values, followed by one label byte when label-flag = 1.

inline constexpr unsigned kFeatureFileVersion = 1;

namespace detail {

inline void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline double get_f64(std::string_view in, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::string encode_features(const FeatureMatrix& f) {
  const bool labeled = f.labels.has_value();
  if (labeled && f.labels->size() != f.rows) throw InvalidInput("encode_features: label count != rows");
  std::string out = "RCFD-FEAT " + std::to_string(kFeatureFileVersion) + " " + std::to_string(f.rows) +
                    " " + std::to_string(kFeatureLen) + " " + (labeled ? "1" : "0") + "\n";
  out.reserve(out.size() + f.rows * (kFeatureLen * 8 + 1));
  for (std::size_t i = 0; i < f.rows; ++i) {
    for (double v : f.row(i)) detail::put_f64(out, v);
    if (labeled) out.push_back(static_cast<char>((*f.labels)[i]));
  }
  return out;
}

inline FeatureMatrix decode_features(std::string_view buf) {
  const auto nl = buf.find('\n');
  if (nl == std::string_view::npos || buf.substr(0, 10) != "RCFD-FEAT ")
    throw BadMagic("feature file: missing RCFD-FEAT header");
  std::istringstream hs{std::string(buf.substr(10, nl - 10))};
  unsigned version = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int flag = -1;
  if (!(hs >> version)) throw FormatError("feature file: malformed header");
  if (version != kFeatureFileVersion) throw VersionMismatch(version, kFeatureFileVersion);
  if (!(hs >> rows >> cols >> flag) || (flag != 0 && flag != 1))
    throw FormatError("feature file: malformed header");
  if (cols != kFeatureLen)
    throw FormatError("feature file: expected 133 columns, got " + std::to_string(cols));
  const std::size_t record = kFeatureLen * 8 + static_cast<std::size_t>(flag);
  const std::size_t body = buf.size() - nl - 1;
  if (body < rows * record)
    throw Truncated("feature file: payload holds " + std::to_string(body) + " bytes, header promises " +
                    std::to_string(rows * record));
  FeatureMatrix f;
  f.rows = rows;
  f.values.resize(rows * kFeatureLen);
  if (flag == 1) f.labels.emplace(rows);
  std::size_t pos = nl + 1;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < kFeatureLen; ++k, pos += 8)
      f.values[i * kFeatureLen + k] = detail::get_f64(buf, pos);
    if (flag == 1) {
      const auto lab = static_cast<std::uint8_t>(buf[pos++]);
      if (lab > 1) throw FormatError("feature file: label byte must be 0 or 1");
      (*f.labels)[i] = lab;
    }
  }
  return f;
}

inline void write_features(const std::filesystem::path& path, const FeatureMatrix& f) {
  write_file(path, encode_features(f));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path));
}

}  // namespace rcfd
