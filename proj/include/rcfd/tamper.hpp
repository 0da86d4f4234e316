#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rcfd/codec.hpp"
#include "rcfd/error.hpp"
#include "rcfd/grid.hpp"
#include "rcfd/image.hpp"
#include "rcfd/random.hpp"

namespace rcfd {

// Grid-aligned tamper rectangle in pixels.
struct TamperRect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  std::size_t area() const noexcept { return w * h; }
  bool contains(std::size_t row, std::size_t col) const noexcept {
    return row >= y0 && row < y0 + h && col >= x0 && col < x0 + w;
  }
  bool operator==(const TamperRect&) const = default;
};

using GroundTruthMask = UnitGrid;

struct ForgedImage {
  GrayImage image;
  TamperRect rect;
  GroundTruthMask mask;
};

namespace detail {

inline std::size_t round_to_grid(double v) {
  return static_cast<std::size_t>(std::llround(v / static_cast<double>(kUnit))) * kUnit;
}

}  // namespace detail

// Rectangle size for `fraction` of an height x width image: each side is the
// image side scaled by sqrt(fraction), rounded to the nearest multiple of 8.
inline TamperRect tamper_rect_size(std::size_t height, std::size_t width, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidInput("fraction must be in (0, 1), got " + std::to_string(fraction));
  const std::size_t max_h = height / kUnit * kUnit;
  const std::size_t max_w = width / kUnit * kUnit;
  if (max_h == 0 || max_w == 0) throw InvalidInput("image too small for a grid-aligned tamper region");
  const double s = std::sqrt(fraction);
  TamperRect r;
  r.h = std::clamp(detail::round_to_grid(static_cast<double>(height) * s), kUnit, max_h);
  r.w = std::clamp(detail::round_to_grid(static_cast<double>(width) * s), kUnit, max_w);
  if (r.h == height && r.w == width)
    throw InvalidInput("fraction " + std::to_string(fraction) +
                       " leaves no authentic area in a grid-aligned rectangle");
  return r;
}

inline TamperRect place_tamper_rect(std::size_t height, std::size_t width, double fraction,
                                    std::uint64_t seed) {
  TamperRect r = tamper_rect_size(height, width, fraction);
  Rng rng(mix_seed(seed, 0x7a3d));
  const std::size_t slots_y = (height / kUnit * kUnit - r.h) / kUnit + 1;
  const std::size_t slots_x = (width / kUnit * kUnit - r.w) / kUnit + 1;
  r.y0 = static_cast<std::size_t>(rng.below(slots_y)) * kUnit;
  r.x0 = static_cast<std::size_t>(rng.below(slots_x)) * kUnit;
  return r;
}

// Unit is forged iff at least half of its pixels lie inside the rectangle.
inline GroundTruthMask unit_mask(std::size_t height, std::size_t width, const TamperRect& rect) {
  GroundTruthMask mask = UnitGrid::for_image(height, width);
  for (std::size_t ur = 0; ur < mask.rows(); ++ur) {
    const std::size_t r0 = ur * kUnit;
    const std::size_t r1 = std::min(r0 + kUnit, height);
    const std::size_t oy0 = std::max(r0, rect.y0);
    const std::size_t oy1 = std::min(r1, rect.y0 + rect.h);
    for (std::size_t uc = 0; uc < mask.cols(); ++uc) {
      const std::size_t c0 = uc * kUnit;
      const std::size_t c1 = std::min(c0 + kUnit, width);
      const std::size_t ox0 = std::max(c0, rect.x0);
      const std::size_t ox1 = std::min(c1, rect.x0 + rect.w);
      const std::size_t overlap = (oy1 > oy0 && ox1 > ox0) ? (oy1 - oy0) * (ox1 - ox0) : 0;
      mask.set(ur, uc, 2 * overlap >= (r1 - r0) * (c1 - c0));
    }
  }
  return mask;
}

// compress(source, q1) with the rectangle replaced by double_compress(source, q1, q2).
inline ForgedImage make_forged(const GrayImage& source, int q1, int q2, double fraction,
                               std::uint64_t seed) {
  quant_table(q1);
  quant_table(q2);
  ForgedImage out;
  out.rect = place_tamper_rect(source.height(), source.width(), fraction, seed);
  const GrayImage single = compress(source, q1);
  const GrayImage dual = compress(single, q2);
  out.image = single;
  for (std::size_t r = out.rect.y0; r < out.rect.y0 + out.rect.h; ++r)
    for (std::size_t c = out.rect.x0; c < out.rect.x0 + out.rect.w; ++c) out.image(r, c) = dual(r, c);
  out.mask = unit_mask(source.height(), source.width(), out.rect);
  return out;
}

// Authentic single-compressed and double-compressed training corpora.
struct Corpus {
  std::vector<GrayImage> single;
  std::vector<GrayImage> dual;
};

inline Corpus synth_corpus(const std::vector<GrayImage>& images, int q1, int q2) {
  if (images.empty()) throw InvalidInput("synth_corpus: empty image list");
  quant_table(q1);
  quant_table(q2);
  Corpus c;
  c.single.reserve(images.size());
  c.dual.reserve(images.size());
  for (const auto& img : images) {
    c.single.push_back(compress(img, q1));
    c.dual.push_back(compress(c.single.back(), q2));
  }
  return c;
}

// Smooth random texture: a few low-frequency plane waves around mid-gray plus
// Gaussian noise, rounded to integers in [0, 255].
struct TextureParams {
  int waves = 6;
  double min_freq = 0.005;  // cycles per pixel
  double max_freq = 0.08;
  double min_amplitude = 4.0;
  double max_amplitude = 16.0;
  double noise_sigma = 3.0;
};

inline GrayImage synthetic_texture(std::size_t width, std::size_t height, std::uint64_t seed,
                                   const TextureParams& p = {}) {
  if (width == 0 || height == 0) throw InvalidInput("synthetic_texture: empty size");
  Rng rng(mix_seed(seed, 0x7e87));
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < p.waves; ++i) {
    Wave w;
    w.fx = rng.uniform(p.min_freq, p.max_freq) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    w.fy = rng.uniform(p.min_freq, p.max_freq);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amp = rng.uniform(p.min_amplitude, p.max_amplitude);
    waves.push_back(w);
  }
  GrayImage img(width, height);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double v = 128.0;
      for (const auto& w : waves)
        v += w.amp * std::sin(2.0 * std::numbers::pi *
                                  (w.fx * static_cast<double>(c) + w.fy * static_cast<double>(r)) +
                              w.phase);
      v += rng.normal(0.0, p.noise_sigma);
      img(r, c) = clamp_intensity(round_half_away(v));
    }
  return img;
}

// ---------------------------------------------------------------------------
// Corpus manifest: one tab-separated record per forged image.

struct CorpusRecord {
  std::string id;
  std::string source;
  int q1 = 0;
  int q2 = 0;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  TamperRect rect;
  std::string forged;  // paths relative to the manifest's directory
  std::string mask;

  bool operator==(const CorpusRecord&) const = default;
};

inline constexpr const char* kCorpusHeader =
    "#id\tsource\tq1\tq2\tfraction\tseed\tx0\ty0\tw\th\tforged\tmask";

inline std::string format_corpus_record(const CorpusRecord& r) {
  std::ostringstream os;
  os << r.id << '\t' << r.source << '\t' << r.q1 << '\t' << r.q2 << '\t' << r.fraction << '\t'
     << r.seed << '\t' << r.rect.x0 << '\t' << r.rect.y0 << '\t' << r.rect.w << '\t' << r.rect.h
     << '\t' << r.forged << '\t' << r.mask;
  return os.str();
}

inline void write_corpus_manifest(const std::filesystem::path& path,
                                  const std::vector<CorpusRecord>& records) {
  std::string out = std::string(kCorpusHeader) + "\n";
  for (const auto& r : records) out += format_corpus_record(r) + "\n";
  write_file(path, out);
}

inline std::vector<CorpusRecord> read_corpus_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (f.size() != 12)
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected 12 fields, got " +
                         std::to_string(f.size()));
    try {
      CorpusRecord r;
      r.id = f[0];
      r.source = f[1];
      r.q1 = std::stoi(f[2]);
      r.q2 = std::stoi(f[3]);
      r.fraction = std::stod(f[4]);
      r.seed = std::stoull(f[5]);
      r.rect = {std::stoul(f[6]), std::stoul(f[7]), std::stoul(f[8]), std::stoul(f[9])};
      r.forged = f[10];
      r.mask = f[11];
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return records;
}

}  // namespace rcfd
