#pragma once

// Global illuminant estimators. Each maps an image region to one unit-norm
// illuminant; the spatial pipeline runs them per block.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t area() const noexcept { return width * height; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Borrowed rectangular view into an image, with an optional image-sized mask
/// of pixels to leave out of the statistics. If the mask would exclude every
/// pixel of the rectangle it is ignored and the whole rectangle is used.
class Region {
 public:
  Region(const LinearImage& image, Rect rect, const PixelMask* exclude = nullptr)
      : image_(&image), rect_(rect), exclude_(exclude) {
    if (rect.width == 0 || rect.height == 0 || rect.x + rect.width > image.width() ||
        rect.y + rect.height > image.height()) {
      throw ConfigError("region lies outside the image");
    }
    if (exclude_ != nullptr) {
      if (!exclude_->same_size(image)) {
        throw ConfigError("exclusion mask size does not match the image");
      }
      std::size_t kept = 0;
      for (std::size_t y = rect.y; y < rect.y + rect.height; ++y) {
        for (std::size_t x = rect.x; x < rect.x + rect.width; ++x) {
          if (!exclude_->test(x, y)) ++kept;
        }
      }
      if (kept == 0) exclude_ = nullptr;
    }
  }

  static Region whole(const LinearImage& image, const PixelMask* exclude = nullptr) {
    return Region(image, Rect{0, 0, image.width(), image.height()}, exclude);
  }

  const LinearImage& image() const noexcept { return *image_; }
  const Rect& rect() const noexcept { return rect_; }
  std::size_t width() const noexcept { return rect_.width; }
  std::size_t height() const noexcept { return rect_.height; }

  /// Region-local coordinates.
  bool included(std::size_t lx, std::size_t ly) const {
    return exclude_ == nullptr || !exclude_->test(rect_.x + lx, rect_.y + ly);
  }
  double value(std::size_t lx, std::size_t ly, std::size_t c) const {
    return image_->at(rect_.x + lx, rect_.y + ly, c);
  }

  template <typename F>
  void for_each_included(F&& f) const {
    for (std::size_t ly = 0; ly < rect_.height; ++ly) {
      for (std::size_t lx = 0; lx < rect_.width; ++lx) {
        if (included(lx, ly)) f(lx, ly, image_->pixel(rect_.x + lx, rect_.y + ly));
      }
    }
  }

 private:
  const LinearImage* image_;
  Rect rect_;
  const PixelMask* exclude_;
};

enum class EstimatorKind { gray_world, white_patch, shades_of_gray, gray_edge };

/// Estimator name plus its parameters. `p` applies to shades-of-gray and
/// gray-edge, `smooth_sigma` to gray-edge only.
struct EstimatorId {
  EstimatorKind kind = EstimatorKind::gray_world;
  double p = 6.0;
  double smooth_sigma = 1.0;

  static EstimatorId gray_world() { return {EstimatorKind::gray_world}; }
  static EstimatorId white_patch() { return {EstimatorKind::white_patch}; }
  static EstimatorId shades_of_gray(double p = 6.0) { return {EstimatorKind::shades_of_gray, p}; }
  static EstimatorId gray_edge(double p = 6.0, double sigma = 1.0) {
    return {EstimatorKind::gray_edge, p, sigma};
  }

  friend bool operator==(const EstimatorId&, const EstimatorId&) = default;
};

namespace detail {

inline void require_exponent(double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw ConfigError("Minkowski exponent must be finite and >= 1");
  }
}

// Minkowski p-mean per channel, computed relative to the channel maximum so
// large p neither overflows nor underflows.
inline Vec3 minkowski_mean(const std::vector<Vec3>& samples, double p) {
  Vec3 peak{0.0, 0.0, 0.0};
  for (const auto& s : samples) {
    for (std::size_t c = 0; c < 3; ++c) peak[c] = std::max(peak[c], s[c]);
  }
  Vec3 out{0.0, 0.0, 0.0};
  if (samples.empty()) return out;
  for (std::size_t c = 0; c < 3; ++c) {
    if (peak[c] <= 0.0) continue;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::pow(s[c] / peak[c], p);
    out[c] = peak[c] * std::pow(acc / static_cast<double>(samples.size()), 1.0 / p);
  }
  return out;
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("invalid value for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace detail

/// Normalized per-channel mean of the included pixels.
inline Illuminant gray_world(const Region& r) {
  Vec3 sum{0.0, 0.0, 0.0};
  std::size_t n = 0;
  r.for_each_included([&](std::size_t, std::size_t, std::span<const double, 3> px) {
    for (std::size_t c = 0; c < 3; ++c) sum[c] += px[c];
    ++n;
  });
  const double inv = 1.0 / static_cast<double>(n);
  return normalize_to_unit(Vec3{sum[0] * inv, sum[1] * inv, sum[2] * inv});
}

/// Normalized per-channel maximum of the included pixels.
inline Illuminant white_patch(const Region& r) {
  Vec3 peak{0.0, 0.0, 0.0};
  r.for_each_included([&](std::size_t, std::size_t, std::span<const double, 3> px) {
    for (std::size_t c = 0; c < 3; ++c) peak[c] = std::max(peak[c], px[c]);
  });
  return normalize_to_unit(peak);
}

/// Minkowski p-mean per channel. p = 1 is gray world, p -> inf approaches white patch.
inline Illuminant shades_of_gray(const Region& r, double p = 6.0) {
  detail::require_exponent(p);
  std::vector<Vec3> samples;
  samples.reserve(r.width() * r.height());
  r.for_each_included([&](std::size_t, std::size_t, std::span<const double, 3> px) {
    samples.push_back(Vec3{px[0], px[1], px[2]});
  });
  if (p == 1.0) {
    // Exact arithmetic mean, so p = 1 reproduces gray_world bit for bit.
    return gray_world(r);
  }
  return normalize_to_unit(detail::minkowski_mean(samples, p));
}

/// Normalized 1-D Gaussian truncated at radius ceil(3 sigma).
inline std::vector<double> truncated_gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("smoothing sigma must be positive");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

/// First-order gray edge: Gaussian smoothing (replicated borders), central
/// difference gradient magnitude per channel, then the Minkowski p-mean of
/// the magnitudes over included pixels.
inline Illuminant gray_edge(const Region& r, double p = 6.0, double smooth_sigma = 1.0) {
  detail::require_exponent(p);
  if (r.width() < 3 || r.height() < 3) {
    throw ConfigError("gray edge needs a region of at least 3x3 pixels");
  }
  const auto kernel = truncated_gaussian_kernel(smooth_sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(r.width());
  const auto h = static_cast<std::ptrdiff_t>(r.height());
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t hi) { return std::clamp<std::ptrdiff_t>(v, 0, hi - 1); };

  Raster<double, 3> horiz(r.width(), r.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 r.value(static_cast<std::size_t>(clampi(x + k, w)), static_cast<std::size_t>(y), c);
        }
        horiz.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) = acc;
      }
    }
  }
  Raster<double, 3> smooth(r.width(), r.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 horiz.at(static_cast<std::size_t>(x), static_cast<std::size_t>(clampi(y + k, h)), c);
        }
        smooth.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) = acc;
      }
    }
  }

  std::vector<Vec3> magnitudes;
  magnitudes.reserve(r.width() * r.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const auto ux = static_cast<std::size_t>(x);
      const auto uy = static_cast<std::size_t>(y);
      if (!r.included(ux, uy)) continue;
      Vec3 m{};
      for (std::size_t c = 0; c < 3; ++c) {
        const double dx = 0.5 * (smooth.at(static_cast<std::size_t>(clampi(x + 1, w)), uy, c) -
                                 smooth.at(static_cast<std::size_t>(clampi(x - 1, w)), uy, c));
        const double dy = 0.5 * (smooth.at(ux, static_cast<std::size_t>(clampi(y + 1, h)), c) -
                                 smooth.at(ux, static_cast<std::size_t>(clampi(y - 1, h)), c));
        m[c] = std::sqrt(dx * dx + dy * dy);
      }
      magnitudes.push_back(m);
    }
  }
  return normalize_to_unit(detail::minkowski_mean(magnitudes, p));
}

/// Single dispatch point so the CLI, pipeline and server name algorithms identically.
inline Illuminant estimate(const EstimatorId& id, const Region& r) {
  switch (id.kind) {
    case EstimatorKind::gray_world:
      return gray_world(r);
    case EstimatorKind::white_patch:
      return white_patch(r);
    case EstimatorKind::shades_of_gray:
      return shades_of_gray(r, id.p);
    case EstimatorKind::gray_edge:
      return gray_edge(r, id.p, id.smooth_sigma);
  }
  throw ConfigError("unknown estimator");
}

/// Canonical spelling: gray-world, white-patch, shades-of-gray:p=6, gray-edge:p=6,sigma=1.
inline std::string to_string(const EstimatorId& id) {
  switch (id.kind) {
    case EstimatorKind::gray_world:
      return "gray-world";
    case EstimatorKind::white_patch:
      return "white-patch";
    case EstimatorKind::shades_of_gray:
      return "shades-of-gray:p=" + detail::format_number(id.p);
    case EstimatorKind::gray_edge:
      return "gray-edge:p=" + detail::format_number(id.p) +
             ",sigma=" + detail::format_number(id.smooth_sigma);
  }
  return "unknown";
}

/// Parses the canonical spelling. Parameters may be omitted (defaults p=6, sigma=1).
inline EstimatorId parse_estimator(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view params = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  EstimatorId id;
  if (name == "gray-world") {
    id = EstimatorId::gray_world();
  } else if (name == "white-patch") {
    id = EstimatorId::white_patch();
  } else if (name == "shades-of-gray") {
    id = EstimatorId::shades_of_gray();
  } else if (name == "gray-edge") {
    id = EstimatorId::gray_edge();
  } else {
    throw ConfigError("unknown estimator '" + std::string(text) + "'");
  }

  if (colon != std::string_view::npos && params.empty()) {
    throw ConfigError("estimator '" + std::string(text) + "' has an empty parameter list");
  }
  std::string_view rest = params;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("malformed estimator parameter '" + std::string(item) + "'");
    }
    const std::string_view key = item.substr(0, eq);
    const double value = detail::parse_number(item.substr(eq + 1), key);
    if (key == "p" && (id.kind == EstimatorKind::shades_of_gray || id.kind == EstimatorKind::gray_edge)) {
      id.p = value;
    } else if (key == "sigma" && id.kind == EstimatorKind::gray_edge) {
      id.smooth_sigma = value;
    } else {
      throw ConfigError("parameter '" + std::string(key) + "' not accepted by " + std::string(name));
    }
  }
  if (id.kind == EstimatorKind::shades_of_gray || id.kind == EstimatorKind::gray_edge) {
    detail::require_exponent(id.p);
  }
  if (id.kind == EstimatorKind::gray_edge && !(id.smooth_sigma > 0.0)) {
    throw ConfigError("gray-edge sigma must be positive");
  }
  return id;
}

/// The four registered estimators with their default parameters.
inline std::vector<EstimatorId> estimator_registry() {
  return {EstimatorId::gray_world(), EstimatorId::white_patch(), EstimatorId::shades_of_gray(),
          EstimatorId::gray_edge()};
}

}  // namespace spatialcc
