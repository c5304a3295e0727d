#pragma once

// Illuminant field rasters: 16-bit RGB PNG holding each unit vector scaled by 65535.

#include <string>

#include "spatialcc/pipeline.hpp"
#include "spatialcc/png_io.hpp"

namespace spatialcc {

inline void save_field_png(const IlluminantField& field, const std::string& path) {
  PngSamples s;
  s.width = field.width();
  s.height = field.height();
  s.bit_depth = 16;
  const auto values = field.rgb.values();
  s.rgb.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.rgb[i] = quantize(values[i], Transfer::linear, 16);
  write_png_samples(path, s);
}

/// Loads and re-normalizes a field raster. All-zero pixels (typically masked
/// out in ground truth) become white and are flagged.
inline IlluminantField load_field_png(const std::string& path) {
  const PngSamples s = read_png_samples(path);
  const double full = s.bit_depth == 16 ? 65535.0 : 255.0;
  IlluminantField field(s.width, s.height);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const std::size_t i = (y * s.width + x) * 3;
      const Vec3 v{s.rgb[i] / full, s.rgb[i + 1] / full, s.rgb[i + 2] / full};
      if (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0) {
        field.flagged.set(x, y);
        continue;
      }
      field.set(x, y, normalize_to_unit(v));
    }
  }
  return field;
}

/// Pixels set in `mask` as white, others black; 8-bit. Used for masks and flags.
inline void save_mask_png(const PixelMask& mask, const std::string& path) {
  PngSamples s;
  s.width = mask.width();
  s.height = mask.height();
  s.bit_depth = 8;
  s.rgb.resize(s.width * s.height * 3);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const std::uint16_t v = mask.test(x, y) ? 255 : 0;
      for (std::size_t c = 0; c < 3; ++c) s.rgb[(y * s.width + x) * 3 + c] = v;
    }
  }
  write_png_samples(path, s);
}

/// Any nonzero channel marks the pixel as set.
inline PixelMask load_mask_png(const std::string& path) {
  const PngSamples s = read_png_samples(path);
  PixelMask mask(s.width, s.height);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const std::size_t i = (y * s.width + x) * 3;
      if (s.rgb[i] != 0 || s.rgb[i + 1] != 0 || s.rgb[i + 2] != 0) mask.set(x, y);
    }
  }
  return mask;
}

}  // namespace spatialcc
