#pragma once

// Parametric color-assimilation stimuli and a measurement of how far a
// processed target moves toward the color of its surrounding inducers.
//
// All three patterns share one band layout. A pattern maps each pixel to a
// 1-D coordinate (row, radius, or distance to a lattice point) whose bands are
// `100 / inducer_frequency` pixels apart. Around every band center sits a
// target band of width `target_fraction * period`, flanked on both sides by
// inducer bands of `inducer_thickness` pixels. Target bands only count inside
// the target geometry; everything else is background.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/eval.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

enum class Pattern { concentric_disks, stripe_grating, ring_lattice };

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::concentric_disks:
      return "concentric_disks";
    case Pattern::stripe_grating:
      return "stripe_grating";
    case Pattern::ring_lattice:
      return "ring_lattice";
  }
  return "unknown";
}

inline Pattern parse_pattern(std::string_view s) {
  if (s == "concentric_disks") return Pattern::concentric_disks;
  if (s == "stripe_grating") return Pattern::stripe_grating;
  if (s == "ring_lattice") return Pattern::ring_lattice;
  throw SpecError("unknown pattern '" + std::string(s) + "'");
}

struct TargetRect {
  double x = 0, y = 0, width = 0, height = 0;
  friend bool operator==(const TargetRect&, const TargetRect&) = default;
};

struct TargetDisk {
  double cx = 0, cy = 0, radius = 0;
  friend bool operator==(const TargetDisk&, const TargetDisk&) = default;
};

/// Where targets go. Rectangles are used by stripe_grating and ring_lattice,
/// disks by concentric_disks.
struct TargetGeometry {
  std::vector<TargetRect> rects;
  std::vector<TargetDisk> disks;
  /// Target band width as a fraction of the band period.
  double target_fraction = 0.4;
  /// ring_lattice only: pick each ring's color at random (seeded) instead of per rectangle.
  bool mixed_colors = false;
  friend bool operator==(const TargetGeometry&, const TargetGeometry&) = default;
};

struct IllusionSpec {
  Pattern pattern = Pattern::stripe_grating;
  std::size_t width = 512;
  std::size_t height = 512;
  Vec3 background{0.5, 0.5, 0.5};
  Vec3 target_color{0.55, 0.55, 0.55};
  std::vector<Vec3> inducer_colors{{0.85, 0.3, 0.1}};
  double inducer_thickness = 2.0;
  /// Cycles per 100 pixels.
  double inducer_frequency = 8.0;
  TargetGeometry geometry;
  std::uint64_t seed = 0;

  double period() const { return 100.0 / inducer_frequency; }
  friend bool operator==(const IllusionSpec&, const IllusionSpec&) = default;
};

/// Throws one SpecError naming every offending field.
inline void validate(const IllusionSpec& spec) {
  auto color_ok = [](const Vec3& c) {
    return std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
  };
  std::vector<std::string> problems;
  if (spec.width < 64 || spec.height < 64) problems.push_back("canvas: must be at least 64x64");
  if (!(spec.inducer_thickness >= 0.0) || !std::isfinite(spec.inducer_thickness)) {
    problems.push_back("inducerThickness: must be >= 0");
  }
  if (!(spec.inducer_frequency > 0.0) || !std::isfinite(spec.inducer_frequency)) {
    problems.push_back("inducerFrequency: must be > 0");
  }
  if (!color_ok(spec.background)) problems.push_back("background: components must lie in [0,1]");
  if (!color_ok(spec.target_color)) problems.push_back("targetColor: components must lie in [0,1]");
  if (spec.inducer_colors.empty()) problems.push_back("inducerColors: at least one color required");
  for (std::size_t i = 0; i < spec.inducer_colors.size(); ++i) {
    if (!color_ok(spec.inducer_colors[i])) {
      problems.push_back("inducerColors[" + std::to_string(i) + "]: components must lie in [0,1]");
    }
  }
  const double f = spec.geometry.target_fraction;
  if (!(f > 0.0 && f <= 1.0)) problems.push_back("targetGeometry.targetFraction: must lie in (0,1]");
  if (spec.pattern == Pattern::concentric_disks && spec.geometry.disks.empty()) {
    problems.push_back("targetGeometry.disks: concentric_disks needs at least one disk");
  }
  if (spec.pattern != Pattern::concentric_disks && spec.geometry.rects.empty()) {
    problems.push_back("targetGeometry.rects: pattern needs at least one rectangle");
  }
  if (problems.empty()) return;
  std::string text = "invalid illusion spec";
  for (const auto& p : problems) text += "\n  " + p;
  throw SpecError(text);
}

struct IllusionStimulus {
  LinearImage image;
  PixelMask target_mask;
  PixelMask inducer_mask;
  IllusionSpec spec;
};

namespace detail {

enum class BandClass { none, target, inducer };

struct BandHit {
  BandClass kind = BandClass::none;
  long index = 0;
};

// Classifies a 1-D coordinate against the nearest band center.
inline BandHit classify_band(double coord, double period, double target_width, double thickness) {
  const double k = std::floor(coord / period);
  const double offset = std::abs(coord - (k + 0.5) * period);
  const double half = 0.5 * target_width;
  if (offset < half) return {BandClass::target, static_cast<long>(k)};
  if (offset < half + thickness) return {BandClass::inducer, static_cast<long>(k)};
  return {BandClass::none, static_cast<long>(k)};
}

inline bool inside(const TargetRect& r, double px, double py) {
  return px >= r.x && px < r.x + r.width && py >= r.y && py < r.y + r.height;
}

inline std::size_t wrap_index(long k, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

}  // namespace detail

/// Renders the stimulus. Pure function of the spec (including its seed);
/// hard edges, so the masks are exact.
inline IllusionStimulus generate_illusion(const IllusionSpec& spec) {
  validate(spec);
  const std::size_t w = spec.width;
  const std::size_t h = spec.height;
  IllusionStimulus stim{LinearImage(w, h), PixelMask(w, h), PixelMask(w, h), spec};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) stim.image.set(x, y, spec.background);
  }

  const double period = spec.period();
  const double target_width = spec.geometry.target_fraction * period;
  const double t = spec.inducer_thickness;
  const std::size_t ncolors = spec.inducer_colors.size();

  auto paint = [&](std::size_t x, std::size_t y, detail::BandClass kind, const Vec3& inducer) {
    if (kind == detail::BandClass::target) {
      stim.image.set(x, y, spec.target_color);
      stim.target_mask.set(x, y);
    } else if (kind == detail::BandClass::inducer) {
      stim.image.set(x, y, inducer);
      stim.inducer_mask.set(x, y);
    }
  };

  switch (spec.pattern) {
    case Pattern::stripe_grating: {
      // Horizontal grating across the canvas; target bands only inside rects.
      for (std::size_t y = 0; y < h; ++y) {
        const double py = static_cast<double>(y) + 0.5;
        const auto hit = detail::classify_band(py, period, target_width, t);
        const Vec3& inducer = spec.inducer_colors[detail::wrap_index(hit.index, ncolors)];
        for (std::size_t x = 0; x < w; ++x) {
          const double px = static_cast<double>(x) + 0.5;
          auto kind = hit.kind;
          if (kind == detail::BandClass::target) {
            const bool in_rect = std::any_of(spec.geometry.rects.begin(), spec.geometry.rects.end(),
                                             [&](const TargetRect& r) { return detail::inside(r, px, py); });
            if (!in_rect) kind = detail::BandClass::none;
          }
          paint(x, y, kind, inducer);
        }
      }
      break;
    }
    case Pattern::concentric_disks: {
      // Rings around each disk center; ring colors cycle, offset per disk.
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double px = static_cast<double>(x) + 0.5;
          const double py = static_cast<double>(y) + 0.5;
          for (std::size_t d = 0; d < spec.geometry.disks.size(); ++d) {
            const auto& disk = spec.geometry.disks[d];
            const double r = std::hypot(px - disk.cx, py - disk.cy);
            if (r >= disk.radius) continue;
            const auto hit = detail::classify_band(r, period, target_width, t);
            paint(x, y, hit.kind,
                  spec.inducer_colors[detail::wrap_index(hit.index + static_cast<long>(d), ncolors)]);
            break;
          }
        }
      }
      break;
    }
    case Pattern::ring_lattice: {
      // A dot-and-ring per lattice cell inside each rect.
      std::mt19937_64 rng(spec.seed);
      for (std::size_t ri = 0; ri < spec.geometry.rects.size(); ++ri) {
        const auto& rect = spec.geometry.rects[ri];
        const auto cols = static_cast<std::size_t>(std::max(0.0, std::floor(rect.width / period)));
        const auto rows = static_cast<std::size_t>(std::max(0.0, std::floor(rect.height / period)));
        std::vector<std::size_t> cell_color(cols * rows, ri % ncolors);
        if (spec.geometry.mixed_colors) {
          std::uniform_int_distribution<std::size_t> pick(0, ncolors - 1);
          for (auto& c : cell_color) c = pick(rng);
        }
        const auto x_lo = static_cast<std::size_t>(std::max(0.0, std::floor(rect.x)));
        const auto y_lo = static_cast<std::size_t>(std::max(0.0, std::floor(rect.y)));
        const auto x_hi = std::min(w, static_cast<std::size_t>(std::max(0.0, std::ceil(rect.x + rect.width))));
        const auto y_hi = std::min(h, static_cast<std::size_t>(std::max(0.0, std::ceil(rect.y + rect.height))));
        for (std::size_t y = y_lo; y < y_hi; ++y) {
          for (std::size_t x = x_lo; x < x_hi; ++x) {
            const double px = static_cast<double>(x) + 0.5 - rect.x;
            const double py = static_cast<double>(y) + 0.5 - rect.y;
            if (px < 0 || py < 0) continue;
            const auto ci = static_cast<std::size_t>(std::floor(px / period));
            const auto cj = static_cast<std::size_t>(std::floor(py / period));
            if (ci >= cols || cj >= rows) continue;
            const double dx = px - (static_cast<double>(ci) + 0.5) * period;
            const double dy = py - (static_cast<double>(cj) + 0.5) * period;
            const double r = std::hypot(dx, dy);
            detail::BandClass kind = detail::BandClass::none;
            if (r < 0.5 * target_width) {
              kind = detail::BandClass::target;
            } else if (r < 0.5 * target_width + t) {
              kind = detail::BandClass::inducer;
            }
            paint(x, y, kind, spec.inducer_colors[cell_color[cj * cols + ci]]);
          }
        }
      }
      break;
    }
  }

  if (stim.target_mask.count() == 0) {
    throw SpecError("targetGeometry: spec produces no target pixels");
  }
  return stim;
}

/// Replaces the stimulus' inducer pixels (and, with `all_non_target`, every
/// non-target pixel) of `img` by `fill`; target pixels are left untouched.
/// `img` is the stimulus itself or a processed output of the same size.
inline LinearImage extract_target(const IllusionStimulus& stim, const LinearImage& img, const Vec3& fill,
                                  bool all_non_target = false) {
  if (!img.same_size(stim.image)) throw ConfigError("image size differs from the stimulus");
  LinearImage out = img;
  for (std::size_t y = 0; y < out.height(); ++y) {
    for (std::size_t x = 0; x < out.width(); ++x) {
      const bool replace = all_non_target ? !stim.target_mask.test(x, y) : stim.inducer_mask.test(x, y);
      if (replace) out.set(x, y, fill);
    }
  }
  return out;
}

/// The "input target" view of a fresh stimulus.
inline LinearImage extract_target(const IllusionStimulus& stim, const Vec3& fill, bool all_non_target = false) {
  return extract_target(stim, stim.image, fill, all_non_target);
}

/// Variance of each channel over the masked pixels, summed over channels.
/// Deviations are taken from the first masked pixel, so a constant region is exactly 0.
inline double masked_variance(const LinearImage& img, const PixelMask& mask) {
  if (!mask.same_size(img)) throw ConfigError("mask size differs from the image");
  std::optional<Vec3> origin;
  Vec3 sum{0.0, 0.0, 0.0};
  Vec3 sum_sq{0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      if (!mask.test(x, y)) continue;
      const Vec3 px = img.get(x, y);
      if (!origin) origin = px;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = px[c] - (*origin)[c];
        sum[c] += d;
        sum_sq[c] += d * d;
      }
      ++n;
    }
  }
  if (n == 0) throw EmptyFieldError("mask selects no pixels");
  double var = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double m = sum[c] / static_cast<double>(n);
    var += std::max(0.0, sum_sq[c] / static_cast<double>(n) - m * m);
  }
  return var;
}

// ---------------------------------------------------------------------------
// Assimilation shift

/// 4-connected components of a mask; label 0 is background, regions are 1..n
/// numbered in raster order of their first pixel.
struct Components {
  Raster<std::uint32_t, 1> labels;
  std::size_t count = 0;
};

inline Components connected_components(const PixelMask& mask) {
  Components out{Raster<std::uint32_t, 1>(mask.width(), mask.height(), 0), 0};
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y) || out.labels.at(x, y) != 0) continue;
      const auto label = static_cast<std::uint32_t>(++out.count);
      out.labels.at(x, y) = label;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        auto visit = [&](std::size_t nx, std::size_t ny) {
          if (mask.test(nx, ny) && out.labels.at(nx, ny) == 0) {
            out.labels.at(nx, ny) = label;
            stack.emplace_back(nx, ny);
          }
        };
        if (cx > 0) visit(cx - 1, cy);
        if (cx + 1 < mask.width()) visit(cx + 1, cy);
        if (cy > 0) visit(cx, cy - 1);
        if (cy + 1 < mask.height()) visit(cx, cy + 1);
      }
    }
  }
  return out;
}

struct RegionShift {
  std::size_t label = 0;
  std::size_t pixels = 0;
  Rect bounds;
  Vec3 before{};
  Vec3 after{};
  Vec3 inducer{};
  bool has_inducer = false;
  double angle_before = 0.0;
  double angle_after = 0.0;
  /// angle_before - angle_after in degrees; positive means the target moved toward its inducers.
  double delta = 0.0;
};

struct ShiftReport {
  std::vector<RegionShift> regions;
  double mean_delta = 0.0;
  double min_delta = 0.0;
};

/// Inducer pixels within this many pixels (square neighborhood) count as local.
inline std::size_t local_inducer_radius(double thickness) {
  return static_cast<std::size_t>(std::ceil(2.0 * thickness + 2.0));
}

/// Compares each connected target region's mean color before and after
/// processing against the area-weighted mean color of its local inducers.
inline ShiftReport assimilation_shift(const IllusionStimulus& input, const LinearImage& output) {
  if (!output.same_size(input.image)) throw ConfigError("output size differs from the stimulus");
  const Components comps = connected_components(input.target_mask);
  if (comps.count == 0) throw EmptyFieldError("stimulus has no target region");

  const std::size_t w = input.image.width();
  const std::size_t h = input.image.height();
  std::vector<RegionShift> regions(comps.count);
  std::vector<std::array<std::size_t, 4>> box(comps.count, {w, h, 0, 0});  // x0,y0,x1,y1 inclusive
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto l = comps.labels.at(x, y);
      if (l == 0) continue;
      auto& r = regions[l - 1];
      auto& b = box[l - 1];
      ++r.pixels;
      b[0] = std::min(b[0], x);
      b[1] = std::min(b[1], y);
      b[2] = std::max(b[2], x);
      b[3] = std::max(b[3], y);
      auto in = input.image.pixel(x, y);
      auto out = output.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) {
        r.before[c] += in[c];
        r.after[c] += out[c];
      }
    }
  }

  const std::size_t radius = local_inducer_radius(input.spec.inducer_thickness);
  ShiftReport report;
  report.min_delta = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < comps.count; ++i) {
    auto& r = regions[i];
    const auto& b = box[i];
    r.label = i + 1;
    r.bounds = Rect{b[0], b[1], b[2] - b[0] + 1, b[3] - b[1] + 1};
    for (std::size_t c = 0; c < 3; ++c) {
      r.before[c] /= static_cast<double>(r.pixels);
      r.after[c] /= static_cast<double>(r.pixels);
    }

    // Square dilation of the region inside its padded bounding box.
    const std::size_t x0 = b[0] > radius ? b[0] - radius : 0;
    const std::size_t y0 = b[1] > radius ? b[1] - radius : 0;
    const std::size_t x1 = std::min(w - 1, b[2] + radius);
    const std::size_t y1 = std::min(h - 1, b[3] + radius);
    const std::size_t ww = x1 - x0 + 1;
    const std::size_t wh = y1 - y0 + 1;
    std::vector<std::uint8_t> horiz(ww * wh, 0);
    for (std::size_t y = y0; y <= y1; ++y) {
      std::size_t last = std::numeric_limits<std::size_t>::max();
      // distance to the nearest region pixel to the left, then to the right
      std::vector<std::size_t> dist(ww, std::numeric_limits<std::size_t>::max());
      for (std::size_t x = x0; x <= x1; ++x) {
        if (comps.labels.at(x, y) == r.label) last = x;
        if (last != std::numeric_limits<std::size_t>::max()) dist[x - x0] = x - last;
      }
      last = std::numeric_limits<std::size_t>::max();
      for (std::size_t x = x1 + 1; x-- > x0;) {
        if (comps.labels.at(x, y) == r.label) last = x;
        if (last != std::numeric_limits<std::size_t>::max()) dist[x - x0] = std::min(dist[x - x0], last - x);
      }
      for (std::size_t k = 0; k < ww; ++k) horiz[(y - y0) * ww + k] = dist[k] <= radius ? 1 : 0;
    }
    Vec3 inducer{0.0, 0.0, 0.0};
    std::size_t count = 0;
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        if (!input.inducer_mask.test(x, y)) continue;
        const std::size_t ylo = y >= y0 + radius ? y - radius : y0;
        const std::size_t yhi = std::min(y1, y + radius);
        bool near = false;
        for (std::size_t yy = ylo; yy <= yhi && !near; ++yy) near = horiz[(yy - y0) * ww + (x - x0)] != 0;
        if (!near) continue;
        auto px = input.image.pixel(x, y);
        for (std::size_t c = 0; c < 3; ++c) inducer[c] += px[c];
        ++count;
      }
    }
    if (count > 0 && norm(inducer) > kDegenerateNorm) {
      for (double& v : inducer) v /= static_cast<double>(count);
      r.inducer = inducer;
      r.has_inducer = true;
      r.angle_before = angular_error(r.before, r.inducer);
      r.angle_after = angular_error(r.after, r.inducer);
      r.delta = r.angle_before - r.angle_after;
    }
    total += r.delta;
    report.min_delta = std::min(report.min_delta, r.delta);
  }
  report.mean_delta = total / static_cast<double>(comps.count);
  report.regions = std::move(regions);
  return report;
}

// ---------------------------------------------------------------------------
// Reproduction runs

/// Illuminant field as a viewable image: scaled so the largest component is 1.
inline LinearImage render_field(const IlluminantField& field) {
  double peak = 0.0;
  for (double v : field.rgb.values()) peak = std::max(peak, v);
  LinearImage out(field.width(), field.height());
  auto src = field.rgb.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = peak > 0.0 ? src[i] / peak : 0.0;
  return out;
}

struct IllusionRun {
  PipelineResult pipeline;
  /// The estimate field rendered as an image; this is what the shift is measured on.
  LinearImage estimates;
  LinearImage corrected;
  ShiftReport shift;
};

/// Runs the pipeline on a stimulus. The perceived-color output is the
/// per-pixel estimate itself, as color assimilation pulls a target toward
/// the local estimate; the von Kries corrected image is returned alongside.
inline IllusionRun reproduce_illusion(const IllusionStimulus& stim, const PipelineParams& params) {
  IllusionRun run;
  run.pipeline = run_pipeline(stim.image, params);
  run.estimates = render_field(run.pipeline.field);
  run.corrected = apply_correction(stim.image, run.pipeline.field);
  run.shift = assimilation_shift(stim, run.estimates);
  return run;
}

/// Stripe grating family used for the frequency ladder.
inline IllusionSpec ladder_stripe_spec(double frequency) {
  IllusionSpec s;
  s.pattern = Pattern::stripe_grating;
  s.inducer_colors = {{0.85, 0.3, 0.1}};
  s.inducer_thickness = 2.0;
  s.inducer_frequency = frequency;
  s.geometry.rects = {{64, 96, 384, 320}};
  s.geometry.target_fraction = 0.4;
  return s;
}

/// Frequencies of the default ladder, cycles per 100 px.
inline std::array<double, 4> default_frequency_ladder() { return {5.0, 8.0, 11.0, 14.0}; }

/// Six stimuli: the four-step stripe-grating frequency ladder, two-disk
/// concentric rings and a two-rectangle ring lattice.
inline std::vector<IllusionSpec> default_illusion_ladder() {
  std::vector<IllusionSpec> out;
  for (double f : default_frequency_ladder()) out.push_back(ladder_stripe_spec(f));

  IllusionSpec disks;
  disks.pattern = Pattern::concentric_disks;
  disks.inducer_colors = {{0.9, 0.15, 0.15}, {0.85, 0.7, 0.1}};
  disks.inducer_thickness = 2.0;
  disks.inducer_frequency = 8.0;
  disks.geometry.disks = {{150, 256, 110}, {362, 256, 110}};
  out.push_back(disks);

  IllusionSpec lattice;
  lattice.pattern = Pattern::ring_lattice;
  lattice.inducer_colors = {{0.15, 0.3, 0.9}, {0.2, 0.8, 0.25}};
  lattice.inducer_thickness = 2.0;
  lattice.inducer_frequency = 10.0;
  lattice.geometry.target_fraction = 0.5;
  lattice.geometry.rects = {{32, 96, 192, 320}, {288, 96, 192, 320}};
  lattice.seed = 7;
  out.push_back(lattice);
  return out;
}

}  // namespace spatialcc
