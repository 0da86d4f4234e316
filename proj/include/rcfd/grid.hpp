#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rcfd/error.hpp"
#include "rcfd/image.hpp"

namespace rcfd {

inline constexpr std::size_t kUnit = 8;

inline constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Binary grid at 8x8-unit resolution (row-major). 1 = forged.
class UnitGrid {
 public:
  UnitGrid() = default;
  UnitGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

  // Grid covering an image of the given pixel size.
  static UnitGrid for_image(std::size_t height, std::size_t width) {
    return UnitGrid(ceil_div(height, kUnit), ceil_div(width, kUnit));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }

  std::uint8_t operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, bool v) { cells_[r * cols_ + c] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : cells_) n += v;
    return n;
  }

  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  UnitGrid transposed() const {
    UnitGrid t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t.set(c, r, (*this)(r, c));
    return t;
  }

  bool operator==(const UnitGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

// One pixel per unit, 0 -> 0 and 1 -> 255.
inline GrayImage grid_to_image(const UnitGrid& g) {
  GrayImage img(g.cols(), g.rows());
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) img(r, c) = g(r, c) ? 255.0 : 0.0;
  return img;
}

// Inverse of grid_to_image; any intensity >= 128 reads as 1.
inline UnitGrid image_to_grid(const GrayImage& img) {
  UnitGrid g(img.height(), img.width());
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) g.set(r, c, img(r, c) >= 128.0);
  return g;
}

}  // namespace rcfd
