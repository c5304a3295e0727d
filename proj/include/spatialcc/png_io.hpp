#pragma once

// PNG reading and writing for linear RGB rasters.
//
// Requires linking against libpng. Only 8- and 16-bit RGB, RGBA, gray and
// gray+alpha files are accepted; alpha is dropped and gray is replicated.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "spatialcc/color.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/raster.hpp"

namespace spatialcc {

enum class Transfer { linear, srgb };

/// Raw samples straight out of a PNG, before normalization.
struct PngSamples {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> rgb;  // interleaved, width*height*3
};

namespace detail {

struct PngFile {
  std::FILE* fp = nullptr;
  explicit PngFile(std::FILE* f) : fp(f) {}
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
  PngFile(const PngFile&) = delete;
  PngFile& operator=(const PngFile&) = delete;
};

struct PngErrorSink {
  std::string message;
};

inline void png_error_to_sink(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  if (sink) sink->message = msg ? msg : "libpng error";
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

// Everything touched after setjmp lives on the heap behind `state`, so the
// longjmp back into this frame leaves no indeterminate locals.
struct ReadState {
  PngErrorSink sink;
  PngSamples out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  std::string unsupported;
};

inline bool read_png_raw(std::FILE* fp, ReadState* state) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state->sink, png_error_to_sink,
                                           png_warning_ignore);
  if (!png) {
    state->sink.message = "cannot allocate png read struct";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    state->sink.message = "cannot allocate png info struct";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (depth != 8 && depth != 16) {
    state->unsupported = "unsupported bit depth " + std::to_string(depth);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    state->unsupported = "palette images are not supported";
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) {
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  state->buffer.assign(rowbytes * height, 0);
  state->rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) state->rows[y] = state->buffer.data() + y * rowbytes;
  png_read_image(png, state->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  state->out.width = width;
  state->out.height = height;
  state->out.bit_depth = depth;
  state->out.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  const std::size_t n = state->out.rgb.size();
  if (depth == 8) {
    for (std::size_t i = 0; i < n; ++i) state->out.rgb[i] = state->buffer[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      state->out.rgb[i] =
          static_cast<std::uint16_t>((state->buffer[2 * i] << 8) | state->buffer[2 * i + 1]);
    }
  }
  return true;
}

struct WriteState {
  PngErrorSink sink;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
};

inline bool write_png_raw(std::FILE* fp, std::size_t width, std::size_t height, int depth,
                          WriteState* state) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state->sink, png_error_to_sink,
                                            png_warning_ignore);
  if (!png) {
    state->sink.message = "cannot allocate png write struct";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    state->sink.message = "cannot allocate png info struct";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, state->rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

/// Reads the raw 8/16-bit RGB samples of a PNG file.
inline PngSamples read_png_samples(const std::string& path) {
  detail::PngFile file(std::fopen(path.c_str(), "rb"));
  if (!file.fp) {
    throw IoError("cannot open " + path);
  }
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path + ": not a PNG file");
  }
  std::rewind(file.fp);
  auto state = std::make_unique<detail::ReadState>();
  if (!detail::read_png_raw(file.fp, state.get())) {
    if (!state->unsupported.empty()) throw FormatError(path + ": " + state->unsupported);
    throw FormatError(path + ": " + state->sink.message);
  }
  return std::move(state->out);
}

/// Writes raw samples (values must fit the bit depth).
inline void write_png_samples(const std::string& path, const PngSamples& samples) {
  if (samples.bit_depth != 8 && samples.bit_depth != 16) {
    throw ConfigError("PNG depth must be 8 or 16");
  }
  detail::PngFile file(std::fopen(path.c_str(), "wb"));
  if (!file.fp) {
    throw IoError("cannot open " + path + " for writing");
  }
  auto state = std::make_unique<detail::WriteState>();
  const std::size_t bytes_per_sample = samples.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = samples.width * 3 * bytes_per_sample;
  state->buffer.resize(rowbytes * samples.height);
  const std::size_t n = samples.rgb.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t v = samples.rgb[i];
    if (bytes_per_sample == 2) {
      state->buffer[2 * i] = static_cast<png_byte>(v >> 8);
      state->buffer[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    } else {
      state->buffer[i] = static_cast<png_byte>(v);
    }
  }
  state->rows.resize(samples.height);
  for (std::size_t y = 0; y < samples.height; ++y) {
    state->rows[y] = state->buffer.data() + y * rowbytes;
  }
  if (!detail::write_png_raw(file.fp, samples.width, samples.height, samples.bit_depth,
                             state.get())) {
    throw IoError(path + ": " + state->sink.message);
  }
  if (std::fflush(file.fp) != 0) {
    throw IoError("failed to flush " + path);
  }
}

/// Loads a PNG as linear RGB in [0,1]. With Transfer::srgb the sRGB decoding
/// is applied per channel after scaling by the bit depth.
inline LinearImage load_image(const std::string& path, Transfer transfer = Transfer::linear) {
  const PngSamples s = read_png_samples(path);
  const double full = s.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<double> data(s.rgb.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = s.rgb[i] / full;
    data[i] = transfer == Transfer::srgb ? srgb_decode(v) : v;
  }
  return LinearImage(s.width, s.height, std::move(data));
}

/// Quantizes one linear value to a code value at the given depth.
inline std::uint16_t quantize(double linear, Transfer transfer, int depth) {
  const double full = depth == 16 ? 65535.0 : 255.0;
  double v = std::isfinite(linear) ? std::clamp(linear, 0.0, 1.0) : 0.0;
  if (transfer == Transfer::srgb) v = srgb_encode(v);
  return static_cast<std::uint16_t>(std::lround(v * full));
}

/// Saves with values clipped to [0,1], encoded with `transfer` at 8 or 16 bits.
inline void save_image(const LinearImage& img, const std::string& path,
                       Transfer transfer = Transfer::linear, int depth = 16) {
  if (depth != 8 && depth != 16) {
    throw ConfigError("PNG depth must be 8 or 16");
  }
  PngSamples s;
  s.width = img.width();
  s.height = img.height();
  s.bit_depth = depth;
  s.rgb.resize(img.values().size());
  const auto values = img.values();
  for (std::size_t i = 0; i < values.size(); ++i) s.rgb[i] = quantize(values[i], transfer, depth);
  write_png_samples(path, s);
}

/// Parses "linear" / "srgb".
inline Transfer parse_transfer(const std::string& name) {
  if (name == "linear") return Transfer::linear;
  if (name == "srgb") return Transfer::srgb;
  throw ConfigError("unknown transfer '" + name + "'");
}

inline const char* to_string(Transfer t) { return t == Transfer::srgb ? "srgb" : "linear"; }

}  // namespace spatialcc
