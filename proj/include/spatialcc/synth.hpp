#pragma once

// Synthetic Mondrian scenes lit by one or two illuminants, with the exact
// per-pixel illuminant field as ground truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/eval.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

enum class Blend { half_split, linear_ramp };

struct SynthConfig {
  std::size_t width = 256;
  std::size_t height = 256;
  /// Typical patch side in pixels.
  std::size_t patch_size = 24;
  Illuminant first = Illuminant::white();
  Illuminant second = Illuminant::white();
  Blend blend = Blend::half_split;
  /// Re-center reflectances so every `block` x `block` tile averages to gray.
  bool mean_gray = false;
  std::size_t block = 8;
  /// Brightest channel of the final image.
  double peak = 0.9;
  /// Overrides the Mondrian with a constant reflectance.
  std::optional<double> uniform_reflectance;
};

struct SynthScene {
  LinearImage image;
  IlluminantField truth;
  LinearImage reflectance;
};

/// Field from the blend: left half / right half, or a horizontal ramp.
inline IlluminantField blend_field(const SynthConfig& cfg) {
  IlluminantField field(cfg.width, cfg.height, cfg.first);
  for (std::size_t x = 0; x < cfg.width; ++x) {
    Illuminant l = cfg.first;
    if (cfg.blend == Blend::half_split) {
      if (x >= cfg.width / 2) l = cfg.second;
    } else {
      const double t = cfg.width > 1 ? static_cast<double>(x) / static_cast<double>(cfg.width - 1) : 0.0;
      l = normalize_to_unit(Vec3{(1 - t) * cfg.first[0] + t * cfg.second[0],
                                 (1 - t) * cfg.first[1] + t * cfg.second[1],
                                 (1 - t) * cfg.first[2] + t * cfg.second[2]});
    }
    for (std::size_t y = 0; y < cfg.height; ++y) field.set(x, y, l);
  }
  return field;
}

/// Deterministic per seed.
inline SynthScene synth_scene(std::uint64_t seed, const SynthConfig& cfg) {
  if (cfg.width == 0 || cfg.height == 0 || cfg.patch_size == 0 || cfg.block == 0) {
    throw ConfigError("synthetic scene sizes must be positive");
  }
  if (!(cfg.peak > 0.0)) throw ConfigError("peak must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  LinearImage refl(cfg.width, cfg.height);
  if (cfg.uniform_reflectance) {
    for (double& v : refl.values()) v = *cfg.uniform_reflectance;
  } else {
    auto random_color = [&] { return Vec3{0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng)}; };
    const Vec3 base = random_color();
    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) refl.set(x, y, base);
    }
    const std::size_t patches = std::max<std::size_t>(
        4, 2 * cfg.width * cfg.height / (cfg.patch_size * cfg.patch_size));
    for (std::size_t i = 0; i < patches; ++i) {
      const auto side = [&](std::size_t limit) {
        const double s = cfg.patch_size * (0.5 + unit(rng));
        return std::clamp<std::size_t>(static_cast<std::size_t>(s), 1, limit);
      };
      const std::size_t w = side(cfg.width);
      const std::size_t h = side(cfg.height);
      const auto x0 = static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.width - w + 1));
      const auto y0 = static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.height - h + 1));
      const Vec3 color = random_color();
      for (std::size_t y = y0; y < std::min(cfg.height, y0 + h); ++y) {
        for (std::size_t x = x0; x < std::min(cfg.width, x0 + w); ++x) refl.set(x, y, color);
      }
    }
  }

  if (cfg.mean_gray) {
    for (std::size_t by = 0; by < cfg.height; by += cfg.block) {
      for (std::size_t bx = 0; bx < cfg.width; bx += cfg.block) {
        const std::size_t ex = std::min(cfg.width, bx + cfg.block);
        const std::size_t ey = std::min(cfg.height, by + cfg.block);
        Vec3 mean{0.0, 0.0, 0.0};
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            auto px = refl.pixel(x, y);
            for (std::size_t c = 0; c < 3; ++c) mean[c] += px[c];
          }
        }
        const double gray = (mean[0] + mean[1] + mean[2]) / 3.0;
        for (std::size_t y = by; y < ey; ++y) {
          for (std::size_t x = bx; x < ex; ++x) {
            auto px = refl.pixel(x, y);
            for (std::size_t c = 0; c < 3; ++c) px[c] *= gray / mean[c];
          }
        }
      }
    }
  }

  IlluminantField truth = blend_field(cfg);
  LinearImage image(cfg.width, cfg.height);
  double peak = 0.0;
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      auto r = refl.pixel(x, y);
      auto l = truth.rgb.pixel(x, y);
      auto out = image.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) {
        out[c] = r[c] * l[c];
        peak = std::max(peak, out[c]);
      }
    }
  }
  if (peak > 0.0) {
    const double k = cfg.peak / peak;
    for (double& v : image.values()) v *= k;
  }
  return SynthScene{std::move(image), std::move(truth), std::move(refl)};
}

/// Random positive illuminant with components in [0.25, 1] before normalization.
template <typename Rng>
Illuminant random_illuminant(Rng& rng) {
  std::uniform_real_distribution<double> u(0.25, 1.0);
  return normalize_to_unit(Vec3{u(rng), u(rng), u(rng)});
}

/// Two random illuminants whose angular separation lies in [min_deg, max_deg].
template <typename Rng>
std::pair<Illuminant, Illuminant> random_illuminant_pair(Rng& rng, double min_deg, double max_deg) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const Illuminant first = random_illuminant(rng);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Illuminant second = normalize_to_unit(Vec3{u(rng), u(rng), u(rng)});
    const double a = angular_error(first, second);
    if (a >= min_deg && a <= max_deg) return {first, second};
  }
  throw ConfigError("could not draw an illuminant pair with the requested separation");
}

}  // namespace spatialcc
