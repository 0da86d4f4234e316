#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rcfd/error.hpp"

namespace rcfd {

inline double round_half_away(double v) { return std::round(v); }

inline double clamp_intensity(double v) { return std::clamp(v, 0.0, 255.0); }

// Row-major grayscale image, intensities real-valued in [0, 255].
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {
    if (fill < 0.0 || fill > 255.0) throw InvalidInput("GrayImage: fill value outside [0, 255]");
  }

  GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw InvalidInput("GrayImage: data length " + std::to_string(data_.size()) +
                         " != width*height " + std::to_string(width_ * height_));
    for (double v : data_)
      if (!(v >= 0.0 && v <= 255.0)) throw InvalidInput("GrayImage: intensity outside [0, 255]");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

// Copy of the [row0, row0+h) x [col0, col0+w) region; pixels outside the source read as `fill`.
inline GrayImage crop(const GrayImage& img, std::size_t row0, std::size_t col0, std::size_t h,
                      std::size_t w, double fill = 0.0) {
  GrayImage out(w, h, fill);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t sr = row0 + r;
    if (sr >= img.height()) break;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t sc = col0 + c;
      if (sc >= img.width()) break;
      out(r, c) = img(sr, sc);
    }
  }
  return out;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(clamp_intensity(round_half_away(v)));
}

// ---------------------------------------------------------------------------
// PNM (P5 / P6) codec

namespace detail {

inline void skip_pnm_space(std::string_view buf, std::size_t& pos) {
  while (pos < buf.size()) {
    const char ch = buf[pos];
    if (ch == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      ++pos;
    } else {
      break;
    }
  }
}

inline unsigned long read_pnm_uint(std::string_view buf, std::size_t& pos) {
  skip_pnm_space(buf, pos);
  const std::size_t start = pos;
  unsigned long v = 0;
  while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
    v = v * 10 + static_cast<unsigned long>(buf[pos] - '0');
    if (v > (1UL << 30)) throw InvalidInput("PNM: header value too large");
    ++pos;
  }
  if (pos == start) throw InvalidInput("PNM: malformed header");
  return v;
}

}  // namespace detail

inline std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (double v : img.pixels()) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

// Decodes binary PGM (P5) or PPM (P6). Color is converted to rounded luminance
// 0.299 R + 0.587 G + 0.114 B. Maxval other than 255 is rescaled to [0, 255].
inline GrayImage decode_pnm(std::string_view buf) {
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6'))
    throw InvalidInput("PNM: only binary P5/P6 supported");
  const bool color = buf[1] == '6';
  std::size_t pos = 2;
  const auto width = detail::read_pnm_uint(buf, pos);
  const auto height = detail::read_pnm_uint(buf, pos);
  const auto maxval = detail::read_pnm_uint(buf, pos);
  if (width == 0 || height == 0) throw InvalidInput("PNM: zero dimension");
  if (maxval == 0 || maxval > 255) throw InvalidInput("PNM: maxval must be in [1, 255]");
  if (pos >= buf.size()) throw InvalidInput("PNM: missing raster");
  ++pos;  // single whitespace after maxval
  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = width * height * channels;
  if (buf.size() - pos < need) throw InvalidInput("PNM: truncated raster");
  const double scale = 255.0 / static_cast<double>(maxval);
  std::vector<double> data(width * height);
  auto byte = [&](std::size_t i) {
    return std::min(static_cast<double>(static_cast<unsigned char>(buf[pos + i])) * scale, 255.0);
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (color) {
      const double y = 0.299 * byte(3 * i) + 0.587 * byte(3 * i + 1) + 0.114 * byte(3 * i + 2);
      data[i] = clamp_intensity(round_half_away(y));
    } else {
      data[i] = byte(i);
    }
  }
  return GrayImage(width, height, std::move(data));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline GrayImage read_pnm(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  write_file(path, encode_pgm(img));
}

}  // namespace rcfd
