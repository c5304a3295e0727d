#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "spatialcc/errors.hpp"

namespace spatialcc {

using Vec3 = std::array<double, 3>;

inline constexpr double kDegenerateNorm = 1e-12;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
// Squares are summed smallest first so the result does not depend on channel order.
inline double norm(const Vec3& v) {
  std::array<double, 3> sq{v[0] * v[0], v[1] * v[1], v[2] * v[2]};
  if (sq[0] > sq[1]) std::swap(sq[0], sq[1]);
  if (sq[1] > sq[2]) std::swap(sq[1], sq[2]);
  if (sq[0] > sq[1]) std::swap(sq[0], sq[1]);
  return std::sqrt(sq[0] + sq[1] + sq[2]);
}

/// Unit-norm RGB direction of a light source, all components >= 0.
///
/// Only constructible through normalize_to_unit or white(), so the unit-norm
/// invariant holds for every instance.
class Illuminant {
 public:
  /// (1,1,1)/sqrt(3).
  static Illuminant white() {
    const double c = 1.0 / std::numbers::sqrt3;
    return Illuminant(Vec3{c, c, c});
  }

  const Vec3& rgb() const noexcept { return rgb_; }
  double operator[](std::size_t i) const { return rgb_[i]; }

  friend bool operator==(const Illuminant&, const Illuminant&) = default;

 private:
  explicit Illuminant(const Vec3& unit) : rgb_(unit) {}
  friend Illuminant normalize_to_unit(const Vec3& v);

  Vec3 rgb_{};
};

/// v / |v|. Throws DegenerateVectorError when |v| < 1e-12 and ConfigError for
/// negative or non-finite components.
inline Illuminant normalize_to_unit(const Vec3& v) {
  for (double c : v) {
    if (!std::isfinite(c) || c < 0.0) {
      throw ConfigError("illuminant components must be finite and non-negative");
    }
  }
  const double n = norm(v);
  if (n < kDegenerateNorm) {
    throw DegenerateVectorError("vector norm below 1e-12");
  }
  return Illuminant(Vec3{v[0] / n, v[1] / n, v[2] / n});
}

/// sRGB electro-optical transfer (encoded [0,1] -> linear [0,1]).
inline double srgb_decode(double e) {
  if (e <= 0.04045) return e / 12.92;
  return std::pow((e + 0.055) / 1.055, 2.4);
}

/// Inverse of srgb_decode.
inline double srgb_encode(double l) {
  if (l <= 0.0031308) return 12.92 * l;
  return 1.055 * std::pow(l, 1.0 / 2.4) - 0.055;
}

/// Angle between two vectors in radians, in [0, pi].
inline double angle_radians(const Vec3& a, const Vec3& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kDegenerateNorm || nb < kDegenerateNorm) {
    throw DegenerateVectorError("angle undefined for a zero vector");
  }
  // Same angle as acos of the normalized dot product, but accurate near 0 and pi
  // where acos loses about half the digits.
  const Vec3 cr{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return std::atan2(norm(cr), dot(a, b));
}

}  // namespace spatialcc
