#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rcfd/error.hpp"
#include "rcfd/features.hpp"
#include "rcfd/grid.hpp"
#include "rcfd/image.hpp"
#include "rcfd/net.hpp"
#include "rcfd/pipeline.hpp"

namespace rcfd {

struct UnitMap {
  UnitGrid units;
  std::vector<Anchor> provenance;  // anchor of the window that decided each unit, row-major

  std::size_t rows() const noexcept { return units.rows(); }
  std::size_t cols() const noexcept { return units.cols(); }
};

// Every 8-pixel grid position of the image, row-major: one window per unit.
inline std::vector<Anchor> unit_anchors(std::size_t height, std::size_t width) {
  std::vector<Anchor> anchors;
  const std::size_t rows = ceil_div(height, kUnit);
  const std::size_t cols = ceil_div(width, kUnit);
  anchors.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) anchors.push_back({r * kUnit, c * kUnit});
  return anchors;
}

// Classifies the 32x32 window anchored at every unit (image zero-padded at
// the bottom/right) and gives unit (r, c) the label of the window whose
// top-left 8x8 cell it is.
inline UnitMap predict_map(const Network& net, const GrayImage& image, std::size_t workers = worker_count()) {
  if (!net.norm) throw InvalidModel("model carries no normalization statistics");
  if (image.width() < kUnit || image.height() < kUnit)
    throw InvalidInput("predict_map: image must be at least 8x8");
  UnitMap map;
  map.units = UnitGrid::for_image(image.height(), image.width());
  map.provenance = unit_anchors(image.height(), image.width());
  const FeatureMatrix f = features_at(image, map.provenance, workers);
  const auto labels = classify_rows(net, f.values);
  for (std::size_t i = 0; i < labels.size(); ++i) map.units.set(i / map.cols(), i % map.cols(), labels[i] != 0);
  return map;
}

enum class Verdict { authentic, forged };

inline constexpr double kDefaultVerdictTau = 0.05;

inline const char* to_string(Verdict v) { return v == Verdict::forged ? "forged" : "authentic"; }

// Forged iff the fraction of forged units reaches tau.
inline Verdict image_verdict(const UnitGrid& map, double tau = kDefaultVerdictTau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("tau must be in [0, 1]");
  if (map.size() == 0) return Verdict::authentic;
  const double frac = static_cast<double>(map.count()) / static_cast<double>(map.size());
  return frac >= tau ? Verdict::forged : Verdict::authentic;
}

inline Verdict image_verdict(const UnitMap& map, double tau = kDefaultVerdictTau) {
  return image_verdict(map.units, tau);
}

// Input image with forged units brightened by 64 (clamped).
inline GrayImage overlay_image(const GrayImage& image, const UnitGrid& map) {
  GrayImage out = image;
  for (std::size_t r = 0; r < image.height(); ++r)
    for (std::size_t c = 0; c < image.width(); ++c)
      if (map(r / kUnit, c / kUnit)) out(r, c) = clamp_intensity(image(r, c) + 64.0);
  return out;
}

}  // namespace rcfd
