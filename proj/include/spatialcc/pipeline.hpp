#pragma once

// Turns a global estimator into a per-pixel one: estimate every beta x beta
// block, place each estimate at its block center, and spread the sparse
// estimates with a Gaussian kernel, normalizing every pixel to unit norm.
// Optionally each block estimate is weighted by a whiteness-based confidence.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/estimators.hpp"
#include "spatialcc/parallel.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

// ---------------------------------------------------------------------------
// Block grid

struct Block {
  Rect rect;
  std::size_t cx = 0;
  std::size_t cy = 0;
};

/// Non-overlapping tiling. Interior blocks are beta x beta; when the image
/// size is not a multiple of beta the remainder forms smaller border blocks.
struct BlockGrid {
  std::size_t beta = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Block> blocks;
};

inline BlockGrid blockify(std::size_t width, std::size_t height, std::size_t beta) {
  if (beta < 2) throw ConfigError("block size must be at least 2");
  if (width == 0 || height == 0) throw ConfigError("image dimensions must be positive");
  BlockGrid grid{beta, width, height, {}};
  for (std::size_t y0 = 0; y0 < height; y0 += beta) {
    const std::size_t h = std::min(beta, height - y0);
    for (std::size_t x0 = 0; x0 < width; x0 += beta) {
      const std::size_t w = std::min(beta, width - x0);
      grid.blocks.push_back(Block{Rect{x0, y0, w, h}, x0 + w / 2, y0 + h / 2});
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Sparse and dense fields

struct SparseEntry {
  std::size_t x = 0;
  std::size_t y = 0;
  Illuminant illuminant = Illuminant::white();
  double weight = 1.0;
  /// Estimator had no usable signal; `illuminant` is the fallback.
  bool degenerate = false;
};

/// One estimate per block center; every other pixel of the sparse raster is zero.
struct SparseField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<SparseEntry> entries;

  std::size_t degenerate_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.degenerate ? 1 : 0;
    return n;
  }
};

/// Dense per-pixel unit-norm illuminant directions. `flagged` marks pixels
/// that did not get a regular value (interpolation fallback, zero GT pixels).
struct IlluminantField {
  Raster<double, 3> rgb;
  PixelMask flagged;

  IlluminantField() = default;
  IlluminantField(std::size_t width, std::size_t height, const Illuminant& fill = Illuminant::white())
      : rgb(width, height), flagged(width, height, false) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) rgb.set(x, y, fill.rgb());
    }
  }

  std::size_t width() const noexcept { return rgb.width(); }
  std::size_t height() const noexcept { return rgb.height(); }
  Vec3 at(std::size_t x, std::size_t y) const { return rgb.get(x, y); }
  void set(std::size_t x, std::size_t y, const Illuminant& l) { rgb.set(x, y, l.rgb()); }
};

/// Per-block estimates placed at the block centers. Blocks whose estimate is
/// degenerate (e.g. all black) receive `fallback` and are flagged.
inline SparseField sparse_estimates(const LinearImage& img, const BlockGrid& grid, const EstimatorId& id,
                                    const Illuminant& fallback = Illuminant::white(),
                                    const PixelMask* exclude = nullptr) {
  if (!img.same_size(grid.width, grid.height)) {
    throw ConfigError("block grid does not match image dimensions");
  }
  SparseField sparse{img.width(), img.height(), {}};
  sparse.entries.resize(grid.blocks.size());
  parallel_for(grid.blocks.size(), [&](std::size_t i) {
    const Block& b = grid.blocks[i];
    SparseEntry entry{b.cx, b.cy, fallback, 1.0, false};
    try {
      entry.illuminant = estimate(id, Region(img, b.rect, exclude));
    } catch (const DegenerateVectorError&) {
      entry.degenerate = true;
    } catch (const ConfigError&) {
      // gray-edge on a border block thinner than 3 px
      if (id.kind != EstimatorKind::gray_edge || (b.rect.width >= 3 && b.rect.height >= 3)) throw;
      entry.degenerate = true;
    }
    sparse.entries[i] = entry;
  });
  return sparse;
}

/// Isotropic 2-D Gaussian with the 1/(2 pi sigma^2) amplitude.
inline double gaussian_2d(double dx, double dy, double sigma) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
}

/// Support radius of the interpolation kernel.
inline std::size_t truncation_radius(double sigma) {
  return static_cast<std::size_t>(std::ceil(3.0 * sigma));
}

/// Convolves the sparse raster with a Gaussian of `sigma` (square support of
/// radius ceil(3 sigma)) and normalizes every pixel to unit norm. Pixels with
/// no entry inside the support take the nearest entry's illuminant and are flagged.
inline IlluminantField gaussian_interpolate(const SparseField& sparse, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  if (sparse.entries.empty()) throw EmptyFieldError("sparse field has no entries");
  bool any_positive = false;
  for (const auto& e : sparse.entries) {
    if (e.x >= sparse.width || e.y >= sparse.height) throw ConfigError("sparse entry outside the field");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) throw ConfigError("sparse weights must be finite and >= 0");
    any_positive = any_positive || e.weight > 0.0;
  }
  if (!any_positive) throw EmptyFieldError("sparse field has no positive-weight entries");

  const std::size_t width = sparse.width;
  const std::size_t height = sparse.height;
  const std::size_t radius = truncation_radius(sigma);
  const double amplitude = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);

  std::vector<double> g(radius + 1);
  for (std::size_t d = 0; d <= radius; ++d) {
    g[d] = std::exp(-static_cast<double>(d * d) / (2.0 * sigma * sigma));
  }

  // Horizontal pass, only for rows that hold entries. Entries keep their order.
  std::map<std::size_t, std::vector<double>> row_sums;
  for (const auto& e : sparse.entries) {
    if (e.weight <= 0.0) continue;
    auto& row = row_sums[e.y];
    if (row.empty()) row.assign(width * 3, 0.0);
    const std::size_t x_lo = e.x > radius ? e.x - radius : 0;
    const std::size_t x_hi = std::min(width - 1, e.x + radius);
    for (std::size_t x = x_lo; x <= x_hi; ++x) {
      const double w = e.weight * g[x > e.x ? x - e.x : e.x - x];
      for (std::size_t c = 0; c < 3; ++c) row[x * 3 + c] += w * e.illuminant[c];
    }
  }
  std::vector<std::size_t> rows;
  std::vector<const std::vector<double>*> row_data;
  for (const auto& [y, data] : row_sums) {
    rows.push_back(y);
    row_data.push_back(&data);
  }

  IlluminantField field(width, height);
  std::vector<std::uint8_t> uncovered(width * height, 0);
  parallel_for(height, [&](std::size_t y) {
    std::vector<double> acc(width * 3);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t ry = rows[i];
      const std::size_t d = ry > y ? ry - y : y - ry;
      if (d > radius) continue;
      const double gy = g[d];
      const auto& src = *row_data[i];
      for (std::size_t k = 0; k < width * 3; ++k) acc[k] += gy * src[k];
    }
    for (std::size_t x = 0; x < width; ++x) {
      const Vec3 v{acc[x * 3] * amplitude, acc[x * 3 + 1] * amplitude, acc[x * 3 + 2] * amplitude};
      const double peak = std::max({v[0], v[1], v[2]});
      if (!(peak > 0.0)) {
        uncovered[y * width + x] = 1;
        continue;
      }
      // Rescaling by the peak keeps tiny confidence-weighted sums above the degeneracy floor.
      field.set(x, y, normalize_to_unit(Vec3{v[0] / peak, v[1] / peak, v[2] / peak}));
    }
  });

  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (!uncovered[y * width + x]) continue;
      const SparseEntry* nearest = nullptr;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& e : sparse.entries) {
        if (e.weight <= 0.0) continue;
        const double dx = static_cast<double>(e.x) - static_cast<double>(x);
        const double dy = static_cast<double>(e.y) - static_cast<double>(y);
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          nearest = &e;
        }
      }
      field.set(x, y, nearest->illuminant);
      field.flagged.set(x, y);
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// Whiteness and confidence

struct WhitenessMap {
  ScalarMap angle;  // radians, in [0, pi/2]
  PixelMask zero_pixels;
};

/// Angle between each pixel of the mean-normalized image and (1,1,1).
inline WhitenessMap whiteness_map(const LinearImage& img) {
  Vec3 mean{0.0, 0.0, 0.0};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = img.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) mean[c] += px[c];
    }
  }
  const double n = static_cast<double>(img.pixel_count());
  for (double& m : mean) {
    m /= n;
    if (!(m > 0.0)) throw DegenerateImageError("image has a channel with zero mean");
  }
  WhitenessMap out{ScalarMap(img.width(), img.height()), PixelMask(img.width(), img.height())};
  const Vec3 white{1.0, 1.0, 1.0};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = img.pixel(x, y);
      const Vec3 t{px[0] / mean[0], px[1] / mean[1], px[2] / mean[2]};
      if (norm(t) < kDegenerateNorm) {
        out.angle.at(x, y) = std::numbers::pi / 2.0;
        out.zero_pixels.set(x, y);
      } else {
        out.angle.at(x, y) = angle_radians(t, white);
      }
    }
  }
  return out;
}

struct ConfidenceMap {
  ScalarMap value;
  /// Whiteness had (near) zero spread; the map is uniformly 1.
  bool degenerate = false;
};

/// Gaussian of the whiteness values around their mean, with the whiteness
/// standard deviation (population) as its width.
inline ConfidenceMap confidence_map(const ScalarMap& w) {
  const auto values = w.values();
  double mean = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("whiteness map has non-finite values");
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);

  ConfidenceMap out{ScalarMap(w.width(), w.height(), 1.0), false};
  if (sd < 1e-9) {
    out.degenerate = true;
    return out;
  }
  const double amplitude = 1.0 / (2.0 * std::numbers::pi * var);
  auto dst = out.value.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    dst[i] = amplitude * std::exp(-(d * d) / (2.0 * var));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

enum class Confidence { off, whiteness };

inline const char* to_string(Confidence c) { return c == Confidence::whiteness ? "whiteness" : "off"; }

inline Confidence parse_confidence(std::string_view s) {
  if (s == "off") return Confidence::off;
  if (s == "whiteness") return Confidence::whiteness;
  throw ConfigError("unknown confidence mode '" + std::string(s) + "'");
}

struct PipelineParams {
  std::size_t beta = 8;
  double sigma = 24.0;
  EstimatorId estimator = EstimatorId::gray_world();
  Confidence confidence = Confidence::off;
  Illuminant fallback = Illuminant::white();
  /// Pixels with any channel >= this are left out of block statistics.
  /// Non-positive or infinite disables the exclusion.
  double saturation_threshold = 0.98;

  void validate() const {
    if (beta < 2) throw ConfigError("block size must be at least 2");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  }
};

/// Pixels with any channel at or above `threshold`.
inline PixelMask saturation_mask(const LinearImage& img, double threshold) {
  PixelMask mask(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = img.pixel(x, y);
      if (px[0] >= threshold || px[1] >= threshold || px[2] >= threshold) mask.set(x, y);
    }
  }
  return mask;
}

/// Per-channel mean of the entry illuminants (weights ignored), normalized.
inline Illuminant global_estimate(const SparseField& sparse) {
  if (sparse.entries.empty()) throw EmptyFieldError("sparse field has no entries");
  Vec3 sum{0.0, 0.0, 0.0};
  for (const auto& e : sparse.entries) {
    for (std::size_t c = 0; c < 3; ++c) sum[c] += e.illuminant[c];
  }
  const double inv = 1.0 / static_cast<double>(sparse.entries.size());
  return normalize_to_unit(Vec3{sum[0] * inv, sum[1] * inv, sum[2] * inv});
}

struct PipelineResult {
  SparseField sparse;
  IlluminantField field;
  Illuminant global = Illuminant::white();
  bool confidence_degenerate = false;
  std::size_t degenerate_blocks = 0;
  std::size_t fallback_pixels = 0;
  double elapsed_ms = 0.0;
};

/// Runs everything. With `dense = false` only the sparse estimates and the
/// global estimate are produced (global mode).
inline PipelineResult run_pipeline(const LinearImage& img, const PipelineParams& params,
                                   const PixelMask* exclude = nullptr, bool dense = true) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  validate_linear(img);

  std::optional<PixelMask> combined;
  const bool saturation_on = params.saturation_threshold > 0.0 && std::isfinite(params.saturation_threshold);
  if (saturation_on) {
    combined = saturation_mask(img, params.saturation_threshold);
    if (exclude != nullptr) {
      if (!exclude->same_size(img)) throw ConfigError("exclusion mask size does not match the image");
      for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
          if (exclude->test(x, y)) combined->set(x, y);
        }
      }
    }
  }
  const PixelMask* mask = combined ? &*combined : exclude;

  PipelineResult result;
  const BlockGrid grid = blockify(img.width(), img.height(), params.beta);
  result.sparse = sparse_estimates(img, grid, params.estimator, params.fallback, mask);
  result.degenerate_blocks = result.sparse.degenerate_count();
  result.global = global_estimate(result.sparse);

  if (params.confidence == Confidence::whiteness) {
    const WhitenessMap w = whiteness_map(img);
    const ConfidenceMap conf = confidence_map(w.angle);
    result.confidence_degenerate = conf.degenerate;
    for (auto& e : result.sparse.entries) e.weight *= conf.value.at(e.x, e.y);
  }

  if (dense) {
    result.field = gaussian_interpolate(result.sparse, params.sigma);
    result.fallback_pixels = result.field.flagged.count();
  }
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Dense unit-norm illuminant field for `img`.
inline IlluminantField pixelwise_estimate(const LinearImage& img, const PipelineParams& params) {
  return run_pipeline(img, params).field;
}

// ---------------------------------------------------------------------------
// Von Kries correction

inline constexpr double kMinIlluminantComponent = 1e-6;

namespace detail {
// L_k / (1/sqrt3): exactly 1 for the white illuminant, so white is a bitwise fixed point.
inline double correction_divisor(double component) {
  static const double white = Illuminant::white()[0];
  return std::max(component, kMinIlluminantComponent) / white;
}
}  // namespace detail

/// out_k = in_k / (sqrt3 * L_k), components below 1e-6 clamped to 1e-6.
inline LinearImage apply_correction(const LinearImage& img, const Illuminant& light) {
  LinearImage out = img;
  const Vec3 d{detail::correction_divisor(light[0]), detail::correction_divisor(light[1]),
               detail::correction_divisor(light[2])};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = out.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) px[c] /= d[c];
    }
  }
  return out;
}

inline LinearImage apply_correction(const LinearImage& img, const IlluminantField& field) {
  if (field.width() != img.width() || field.height() != img.height()) {
    throw ConfigError("illuminant field size does not match the image");
  }
  LinearImage out = img;
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      auto px = out.pixel(x, y);
      auto l = field.rgb.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) px[c] /= detail::correction_divisor(l[c]);
    }
  }
  return out;
}

/// Number of field components that apply_correction clamps.
inline std::size_t count_clamped_components(const IlluminantField& field) {
  std::size_t n = 0;
  for (double v : field.rgb.values()) n += v < kMinIlluminantComponent ? 1 : 0;
  return n;
}

}  // namespace spatialcc
