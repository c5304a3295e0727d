#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

/// Angle between two illuminant vectors in degrees. Symmetric and invariant
/// to positive scaling of either argument.
inline double angular_error(const Vec3& gt, const Vec3& est) {
  return angle_radians(gt, est) * 180.0 / std::numbers::pi;
}

inline double angular_error(const Illuminant& gt, const Illuminant& est) {
  return angular_error(gt.rgb(), est.rgb());
}

/// Summary of a set of angular errors, all in degrees.
struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double best25_mean = 0.0;
  double worst25_mean = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Median averages the middle pair for even counts; the best/worst quartiles
/// average the ceil(n/4) smallest/largest values.
inline ErrorStats summary_stats(std::span<const double> errors) {
  if (errors.empty()) throw EmptyFieldError("no errors to summarize");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  ErrorStats s;
  s.count = n;
  double total = 0.0;
  for (double e : sorted) total += e;
  s.mean = total / static_cast<double>(n);
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const std::size_t q = (n + 3) / 4;
  double best = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    best += sorted[i];
    worst += sorted[n - 1 - i];
  }
  s.best25_mean = best / static_cast<double>(q);
  s.worst25_mean = worst / static_cast<double>(q);
  s.max = sorted.back();
  return s;
}

struct PixelwiseError {
  ScalarMap degrees;  // zero outside the evaluated pixels
  PixelMask evaluated;
  ErrorStats stats;
};

/// Per-pixel angular error between two fields over the pixels set in `mask`
/// (all pixels when no mask is given).
inline PixelwiseError pixelwise_error(const IlluminantField& gt, const IlluminantField& est,
                                      const PixelMask* mask = nullptr) {
  if (gt.width() != est.width() || gt.height() != est.height()) {
    throw ConfigError("field sizes differ");
  }
  if (mask != nullptr && (mask->width() != gt.width() || mask->height() != gt.height())) {
    throw ConfigError("evaluation mask size differs from the fields");
  }
  PixelwiseError out{ScalarMap(gt.width(), gt.height()), PixelMask(gt.width(), gt.height()), {}};
  std::vector<double> errors;
  errors.reserve(gt.width() * gt.height());
  for (std::size_t y = 0; y < gt.height(); ++y) {
    for (std::size_t x = 0; x < gt.width(); ++x) {
      if (mask != nullptr && !mask->test(x, y)) continue;
      const double e = angular_error(gt.at(x, y), est.at(x, y));
      out.degrees.at(x, y) = e;
      out.evaluated.set(x, y);
      errors.push_back(e);
    }
  }
  if (errors.empty()) throw EmptyFieldError("evaluation mask selects no pixels");
  out.stats = summary_stats(errors);
  return out;
}

}  // namespace spatialcc
