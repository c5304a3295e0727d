#pragma once

// Straightforward reference implementations used only by the tests. They are
// written from the formulas, without sharing code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "spatialcc/pipeline.hpp"

namespace oracle {

using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

inline double srgb_decode(double v) {
  // IEC 61966-2-1
  if (v <= 0.04045) return v / 12.92;
  return std::pow((v + 0.055) / 1.055, 2.4);
}

inline Vec3 unit(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  // atan2 form: acos(1 - eps) alone cannot resolve angles below ~1e-6 degrees.
  const Vec3 ua = unit(a), ub = unit(b);
  const double d = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
  const double cx = ua[1] * ub[2] - ua[2] * ub[1], cy = ua[2] * ub[0] - ua[0] * ub[2], cz = ua[0] * ub[1] - ua[1] * ub[0];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), d) * 180.0 / kPi;
}

inline Vec3 channel_sums(const spatialcc::LinearImage& img) {
  Vec3 s{0, 0, 0};
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) s[c] += img.at(x, y, c);
  return s;
}

// gray edge, spelled out: truncated normalized Gaussian, replicate borders,
// central differences, Minkowski mean of the gradient magnitude.
inline Vec3 gray_edge(const spatialcc::LinearImage& img, double p, double sigma) {
  const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
  const long r = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k;
  double ks = 0;
  for (long i = -r; i <= r; ++i) {
    k.push_back(std::exp(-(double)(i * i) / (2 * sigma * sigma)));
    ks += k.back();
  }
  for (double& v : k) v /= ks;
  auto clampi = [](long v, long lo, long hi) { return v < lo ? lo : (v > hi ? hi : v); };
  Vec3 out{};
  for (int c = 0; c < 3; ++c) {
    std::vector<double> tmp(w * h), sm(w * h);
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        double acc = 0;
        for (long i = -r; i <= r; ++i) acc += k[i + r] * img.at(clampi(x + i, 0, w - 1), y, c);
        tmp[y * w + x] = acc;
      }
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        double acc = 0;
        for (long i = -r; i <= r; ++i) acc += k[i + r] * tmp[clampi(y + i, 0, h - 1) * w + x];
        sm[y * w + x] = acc;
      }
    double sum = 0;
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        const double dx = (sm[y * w + clampi(x + 1, 0, w - 1)] - sm[y * w + clampi(x - 1, 0, w - 1)]) / 2;
        const double dy = (sm[clampi(y + 1, 0, h - 1) * w + x] - sm[clampi(y - 1, 0, h - 1) * w + x]) / 2;
        sum += std::pow(std::sqrt(dx * dx + dy * dy), p);
      }
    out[c] = std::pow(sum / (double)(w * h), 1.0 / p);
  }
  return unit(out);
}

// Weighted Gaussian sum without separability. With radius < 0 every entry
// contributes to every pixel; otherwise only entries inside the square window.
inline Vec3 interpolate_at(const spatialcc::SparseField& s, double sigma, std::size_t qx, std::size_t qy,
                           double radius = -1) {
  Vec3 v{0, 0, 0};
  for (const auto& e : s.entries) {
    const double dx = (double)qx - (double)e.x, dy = (double)qy - (double)e.y;
    if (radius >= 0 && (std::abs(dx) > radius || std::abs(dy) > radius)) continue;
    const double g = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / (2 * kPi * sigma * sigma);
    for (std::size_t c = 0; c < 3; ++c) v[c] += e.weight * g * e.illuminant[c];
  }
  return unit(v);
}

inline double whiteness(const Vec3& px, const Vec3& means) {
  const Vec3 t{px[0] / means[0], px[1] / means[1], px[2] / means[2]};
  const double n = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
  if (n == 0) return kPi / 2;
  return std::acos(std::min(1.0, (t[0] + t[1] + t[2]) / (n * std::sqrt(3.0))));
}

inline double confidence(double w, double mu, double sd) {
  return 1.0 / (2 * kPi * sd * sd) * std::exp(-(w - mu) * (w - mu) / (2 * sd * sd));
}

// Mean over the full sparse raster I_s, zeros included, then normalized.
inline Vec3 raster_mean_global(const spatialcc::SparseField& s) {
  std::vector<Vec3> raster(s.width * s.height, Vec3{0, 0, 0});
  for (const auto& e : s.entries) raster[e.y * s.width + e.x] = e.illuminant.rgb();
  Vec3 sum{0, 0, 0};
  for (const auto& px : raster)
    for (std::size_t c = 0; c < 3; ++c) sum[c] += px[c];
  for (double& v : sum) v /= (double)raster.size();
  return unit(sum);
}

struct Stats {
  double mean, median, best25, worst25, max;
};

inline Stats stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const std::size_t q = (n + 3) / 4;
  Stats s{};
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / (double)n;
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  s.best25 = std::accumulate(v.begin(), v.begin() + q, 0.0) / (double)q;
  s.worst25 = std::accumulate(v.end() - q, v.end(), 0.0) / (double)q;
  s.max = v.back();
  return s;
}

inline spatialcc::LinearImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, double lo = 0.0,
                                           double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  spatialcc::LinearImage img(w, h);
  for (double& v : img.values()) v = u(rng);
  return img;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  return unit({u(rng), u(rng), u(rng)});
}

}  // namespace oracle
