#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spatialcc/errors.hpp"

namespace spatialcc {

/// Dense interleaved raster of `Channels` values per pixel, row-major.
template <typename T, std::size_t Channels>
class Raster {
 public:
  static constexpr std::size_t channels = Channels;
  using value_type = T;

  Raster() = default;

  Raster(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height * Channels, fill) {
    if (width == 0 || height == 0) {
      throw ConfigError("raster dimensions must be positive");
    }
  }

  Raster(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width == 0 || height == 0) {
      throw ConfigError("raster dimensions must be positive");
    }
    if (data_.size() != width * height * Channels) {
      throw ConfigError("raster data length does not match dimensions");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  T& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return data_[(y * width_ + x) * Channels + c];
  }
  const T& at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data_[(y * width_ + x) * Channels + c];
  }

  std::span<T, Channels> pixel(std::size_t x, std::size_t y) {
    return std::span<T, Channels>(data_.data() + (y * width_ + x) * Channels, Channels);
  }
  std::span<const T, Channels> pixel(std::size_t x, std::size_t y) const {
    return std::span<const T, Channels>(data_.data() + (y * width_ + x) * Channels, Channels);
  }

  std::array<T, Channels> get(std::size_t x, std::size_t y) const {
    std::array<T, Channels> out{};
    auto p = pixel(x, y);
    std::copy(p.begin(), p.end(), out.begin());
    return out;
  }

  void set(std::size_t x, std::size_t y, const std::array<T, Channels>& v) {
    auto p = pixel(x, y);
    std::copy(v.begin(), v.end(), p.begin());
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_size(std::size_t w, std::size_t h) const noexcept { return width_ == w && height_ == h; }
  template <typename U, std::size_t C>
  bool same_size(const Raster<U, C>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

/// H x W x 3 linear RGB raster. Channels are finite and >= 0 (see validate_linear).
using LinearImage = Raster<double, 3>;

/// One scalar per pixel (whiteness, confidence, error maps).
using ScalarMap = Raster<double, 1>;

/// One boolean per pixel. Stored as bytes so spans work.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(std::size_t width, std::size_t height, bool fill = false)
      : bits_(width, height, fill ? 1 : 0) {}

  std::size_t width() const noexcept { return bits_.width(); }
  std::size_t height() const noexcept { return bits_.height(); }
  bool empty() const noexcept { return bits_.empty(); }

  bool test(std::size_t x, std::size_t y) const { return bits_.at(x, y) != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { bits_.at(x, y) = v ? 1 : 0; }

  std::size_t count() const {
    auto v = bits_.values();
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
  }

  template <typename U, std::size_t C>
  bool same_size(const Raster<U, C>& other) const noexcept {
    return width() == other.width() && height() == other.height();
  }
  bool same_size(const PixelMask& other) const noexcept {
    return width() == other.width() && height() == other.height();
  }

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

 private:
  Raster<std::uint8_t, 1> bits_;
};

/// Throws FormatError unless every channel is finite and non-negative.
inline void validate_linear(const LinearImage& img) {
  if (img.empty()) {
    throw FormatError("image is empty");
  }
  for (double v : img.values()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw FormatError("linear image contains a negative or non-finite value");
    }
  }
}

/// Multiplies every channel by `k`.
inline LinearImage scaled(const LinearImage& img, double k) {
  LinearImage out = img;
  for (double& v : out.values()) v *= k;
  return out;
}

}  // namespace spatialcc
