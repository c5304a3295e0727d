#include "app.hpp"

#include <atomic>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

namespace spatialcc::app {

EstimateOutput run_estimate(const LinearImage& img, const PipelineParams& params, bool pixelwise) {
  EstimateOutput out;
  out.pixelwise = pixelwise;
  out.result = run_pipeline(img, params, nullptr, pixelwise);
  out.corrected = pixelwise ? apply_correction(img, out.result.field) : apply_correction(img, out.result.global);
  out.meta = estimate_meta(out.result, params, pixelwise ? "pixelwise" : "global");
  return out;
}

void write_estimate_artifacts(const EstimateOutput& out, Transfer transfer, const std::string& field_path,
                              const std::string& corrected_path, const std::string& meta_path) {
  if (out.pixelwise && !field_path.empty()) save_field_png(out.result.field, field_path);
  if (!corrected_path.empty()) save_image(out.corrected, corrected_path, transfer, 16);
  if (!meta_path.empty()) write_json_file(out.meta, meta_path);
}

Vec3 target_only_fill(const IllusionSpec& spec) { return spec.background; }

LinearImage render_stimulus(const IllusionStimulus& stim, bool target_only) {
  return target_only ? extract_target(stim, target_only_fill(stim.spec), true) : stim.image;
}

IllusionOutput process_illusion(const IllusionStimulus& stim, const PipelineParams& params, bool target_only) {
  IllusionOutput out;
  out.run = reproduce_illusion(stim, params);
  const Vec3 fill = target_only_fill(stim.spec);
  out.estimates_view = target_only ? extract_target(stim, out.run.estimates, fill, true) : out.run.estimates;
  out.corrected_view = target_only ? extract_target(stim, out.run.corrected, fill, true) : out.run.corrected;
  out.report = Json{{"params", to_json(params)},
                    {"spec", to_json(stim.spec)},
                    {"shift", to_json(out.run.shift)},
                    {"varianceBefore", masked_variance(stim.image, stim.target_mask)},
                    {"varianceAfter", masked_variance(out.run.estimates, stim.target_mask)},
                    {"timing", {{"pipelineMs", out.run.pipeline.elapsed_ms}}}};
  return out;
}

namespace {

std::filesystem::path scratch_png() {
  static std::atomic<std::uint64_t> counter{0};
  const auto id = std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)) + "_" +
                  std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
  return std::filesystem::temp_directory_path() / ("spatialcc_" + id + ".png");
}

struct ScratchFile {
  std::filesystem::path path = scratch_png();
  ~ScratchFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

std::string encode_png(const LinearImage& img, Transfer transfer, int depth) {
  ScratchFile f;
  save_image(img, f.path.string(), transfer, depth);
  std::ifstream in(f.path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LinearImage decode_png(const std::string& bytes, Transfer transfer) {
  ScratchFile f;
  {
    std::ofstream out(f.path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write scratch file");
  }
  return load_image(f.path.string(), transfer);
}

std::pair<std::size_t, std::size_t> png_dimensions(const std::string& bytes) {
  static const unsigned char signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 24 || std::memcmp(bytes.data(), signature, 8) != 0 || bytes.compare(12, 4, "IHDR") != 0) {
    throw FormatError("not a PNG file");
  }
  auto be32 = [&](std::size_t at) {
    std::size_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
    return v;
  };
  return {be32(16), be32(20)};
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace spatialcc::app
