#pragma once

// Dataset manifests, benchmark runs and beta x sigma parameter sweeps.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "spatialcc/eval.hpp"
#include "spatialcc/field_io.hpp"
#include "spatialcc/parallel.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/png_io.hpp"
#include "spatialcc/serialize.hpp"
#include "spatialcc/synth.hpp"

namespace spatialcc {

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string image;  // resolved path
  Transfer transfer = Transfer::linear;
  /// Exactly one ground-truth kind: a global triplet or a field raster path.
  std::variant<Vec3, std::string> truth;
  std::optional<std::string> mask;
  double black_level = 0.0;
  std::optional<double> saturation_level;
};

struct Manifest {
  std::string name;
  std::vector<ManifestEntry> entries;
};

inline Json to_json(const ManifestEntry& e, const std::filesystem::path& base) {
  auto rel = [&](const std::string& p) { return std::filesystem::path(p).lexically_relative(base).generic_string(); };
  Json j{{"image", rel(e.image)}, {"transfer", to_string(e.transfer)}};
  if (std::holds_alternative<Vec3>(e.truth)) {
    j["groundTruth"] = {{"rgb", to_json(std::get<Vec3>(e.truth))}};
  } else {
    j["groundTruth"] = {{"field", rel(std::get<std::string>(e.truth))}};
  }
  if (e.mask) j["mask"] = rel(*e.mask);
  if (e.black_level != 0.0) j["blackLevel"] = e.black_level;
  if (e.saturation_level) j["saturationLevel"] = *e.saturation_level;
  return j;
}

/// Paths in `base_dir` are resolved relative to it. Throws SpecError listing
/// every offending field.
inline Manifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir) {
  detail::FieldErrors errors;
  if (!j.is_object()) throw SpecError("manifest must be a JSON object");
  detail::reject_unknown_keys(j, {"name", "entries"}, "", errors);
  Manifest m;
  if (!j.contains("name") || !j["name"].is_string()) errors.add("name", "required string");
  else m.name = j["name"].get<std::string>();
  if (!j.contains("entries") || !j["entries"].is_array()) {
    errors.add("entries", "required array");
    errors.raise("invalid manifest");
  }
  auto resolve = [&](const std::string& p) { return (base_dir / p).lexically_normal().string(); };
  const auto& arr = j["entries"];
  if (arr.empty()) errors.add("entries", "must not be empty");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = "entries[" + std::to_string(i) + "]";
    const auto& ej = arr[i];
    if (!ej.is_object()) {
      errors.add(at, "must be an object");
      continue;
    }
    detail::reject_unknown_keys(ej, {"image", "transfer", "groundTruth", "mask", "blackLevel", "saturationLevel"}, at + ".", errors);
    ManifestEntry e;
    if (!ej.contains("image") || !ej["image"].is_string()) errors.add(at + ".image", "required string");
    else e.image = resolve(ej["image"].get<std::string>());
    if (ej.contains("transfer")) {
      if (!ej["transfer"].is_string()) {
        errors.add(at + ".transfer", "must be \"linear\" or \"srgb\"");
      } else {
        try {
          e.transfer = parse_transfer(ej["transfer"].get<std::string>());
        } catch (const ConfigError&) {
          errors.add(at + ".transfer", "must be \"linear\" or \"srgb\"");
        }
      }
    }
    if (!ej.contains("groundTruth") || !ej["groundTruth"].is_object()) {
      errors.add(at + ".groundTruth", "required object with exactly one of rgb, field");
    } else {
      const auto& gt = ej["groundTruth"];
      const bool has_rgb = gt.contains("rgb");
      const bool has_field = gt.contains("field");
      if (has_rgb == has_field) {
        errors.add(at + ".groundTruth", "exactly one of rgb, field required");
      } else if (has_rgb) {
        Vec3 v{};
        if (!detail::read_vec3(gt["rgb"], v) || v[0] < 0 || v[1] < 0 || v[2] < 0 || norm(v) < kDegenerateNorm) {
          errors.add(at + ".groundTruth.rgb", "must be a non-zero non-negative [r,g,b]");
        }
        e.truth = v;
      } else if (!gt["field"].is_string()) {
        errors.add(at + ".groundTruth.field", "must be a path string");
      } else {
        e.truth = resolve(gt["field"].get<std::string>());
      }
      detail::reject_unknown_keys(gt, {"rgb", "field"}, at + ".groundTruth.", errors);
    }
    if (ej.contains("mask")) {
      if (!ej["mask"].is_string()) errors.add(at + ".mask", "must be a path string");
      else e.mask = resolve(ej["mask"].get<std::string>());
    }
    if (ej.contains("blackLevel") && (!detail::read_number(ej["blackLevel"], e.black_level) || e.black_level < 0)) {
      errors.add(at + ".blackLevel", "must be a non-negative number");
    }
    if (ej.contains("saturationLevel")) {
      double s = 0.0;
      if (!detail::read_number(ej["saturationLevel"], s) || !(s > 0)) errors.add(at + ".saturationLevel", "must be a positive number");
      else e.saturation_level = s;
    }
    m.entries.push_back(std::move(e));
  }
  errors.throw_if_any("invalid manifest");
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  const Json j = read_json_file(path);
  return manifest_from_json(j, std::filesystem::path(path).parent_path());
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  Json entries = Json::array();
  for (const auto& e : m.entries) entries.push_back(to_json(e, base.empty() ? std::filesystem::path(".") : base));
  write_json_file(Json{{"name", m.name}, {"entries", entries}}, path);
}

// ---------------------------------------------------------------------------
// Benchmark

enum class BenchMode { global, pixelwise };

inline const char* to_string(BenchMode m) { return m == BenchMode::global ? "global" : "pixelwise"; }

inline BenchMode parse_bench_mode(std::string_view s) {
  if (s == "global") return BenchMode::global;
  if (s == "pixelwise") return BenchMode::pixelwise;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

/// A manifest entry with its files read, or the reason it could not be.
struct LoadedEntry {
  const ManifestEntry* entry = nullptr;
  std::optional<std::string> error;
  LinearImage image;
  std::optional<PixelMask> saturated;
  std::optional<IlluminantField> truth_field;
  std::optional<Illuminant> truth_rgb;
  PixelMask evaluate;
};

/// Reads image, ground truth and mask; subtracts the black level (clamped at
/// zero) and marks pixels at or above the saturation level.
inline LoadedEntry load_entry(const ManifestEntry& e) {
  LoadedEntry out;
  out.entry = &e;
  try {
    LinearImage raw = load_image(e.image, e.transfer);
    if (e.saturation_level) out.saturated = saturation_mask(raw, *e.saturation_level);
    if (e.black_level > 0.0) {
      for (double& v : raw.values()) v = std::max(0.0, v - e.black_level);
    }
    out.image = std::move(raw);
    out.evaluate = PixelMask(out.image.width(), out.image.height(), true);
    if (std::holds_alternative<Vec3>(e.truth)) {
      out.truth_rgb = normalize_to_unit(std::get<Vec3>(e.truth));
    } else {
      out.truth_field = load_field_png(std::get<std::string>(e.truth));
      if (out.truth_field->width() != out.image.width() || out.truth_field->height() != out.image.height()) {
        throw FormatError("ground-truth field size differs from the image");
      }
      for (std::size_t y = 0; y < out.image.height(); ++y) {
        for (std::size_t x = 0; x < out.image.width(); ++x) {
          if (out.truth_field->flagged.test(x, y)) out.evaluate.set(x, y, false);
        }
      }
    }
    if (e.mask) {
      const PixelMask m = load_mask_png(*e.mask);
      if (!m.same_size(out.evaluate)) throw FormatError("mask size differs from the image");
      for (std::size_t y = 0; y < m.height(); ++y) {
        for (std::size_t x = 0; x < m.width(); ++x) {
          if (!m.test(x, y)) out.evaluate.set(x, y, false);
        }
      }
    }
  } catch (const Error& err) {
    out.error = err.what();
  }
  return out;
}

struct EntryResult {
  std::string image;
  bool ok = false;
  std::string error;
  Vec3 global_estimate{};
  /// Global estimate against the ground truth (triplet, or mean direction of the GT field).
  double global_error = 0.0;
  /// Per-pixel statistics, present whenever a per-pixel comparison was made.
  std::optional<ErrorStats> pixel_stats;
  /// The number aggregated across entries: per-pixel mean in pixelwise mode
  /// (and for field ground truth), the global error otherwise.
  double score = 0.0;
  double elapsed_ms = 0.0;
};

struct BenchReport {
  std::string manifest;
  PipelineParams params;
  BenchMode mode = BenchMode::pixelwise;
  std::vector<EntryResult> entries;
  ErrorStats aggregate;
  std::size_t skipped = 0;
  double elapsed_ms = 0.0;
};

struct BenchOptions {
  /// Test hook: replaces the pipeline's dense field for entry `index`.
  std::function<IlluminantField(std::size_t index, const LoadedEntry&)> field_override;
};

namespace detail {

inline Vec3 mean_direction(const IlluminantField& f, const PixelMask& mask) {
  Vec3 s{0.0, 0.0, 0.0};
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      if (!mask.test(x, y)) continue;
      auto p = f.rgb.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) s[c] += p[c];
    }
  }
  return s;
}

}  // namespace detail

inline EntryResult evaluate_entry(std::size_t index, const LoadedEntry& le, const PipelineParams& params, BenchMode mode,
                                  const BenchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  EntryResult r;
  r.image = le.entry->image;
  if (le.error) {
    r.error = *le.error;
    return r;
  }
  try {
    const bool need_field = mode == BenchMode::pixelwise;
    const PipelineResult run =
        run_pipeline(le.image, params, le.saturated ? &*le.saturated : nullptr, need_field && !options.field_override);
    IlluminantField field;
    if (need_field) field = options.field_override ? options.field_override(index, le) : run.field;
    r.global_estimate = run.global.rgb();

    const IlluminantField truth =
        le.truth_field ? *le.truth_field : IlluminantField(le.image.width(), le.image.height(), *le.truth_rgb);
    const Vec3 truth_global = le.truth_rgb ? le.truth_rgb->rgb() : detail::mean_direction(truth, le.evaluate);
    r.global_error = angular_error(truth_global, r.global_estimate);

    if (need_field) {
      r.pixel_stats = pixelwise_error(truth, field, &le.evaluate).stats;
      r.score = r.pixel_stats->mean;
    } else if (le.truth_field) {
      const IlluminantField constant(le.image.width(), le.image.height(), run.global);
      r.pixel_stats = pixelwise_error(truth, constant, &le.evaluate).stats;
      r.score = r.pixel_stats->mean;
    } else {
      r.score = r.global_error;
    }
    r.ok = true;
  } catch (const Error& err) {
    r.error = err.what();
  }
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// Scores already-loaded entries; results keep manifest order.
inline BenchReport run_loaded(const std::string& name, const std::vector<LoadedEntry>& loaded,
                              const PipelineParams& params, BenchMode mode, const BenchOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  BenchReport report;
  report.manifest = name;
  report.params = params;
  report.mode = mode;
  report.entries.resize(loaded.size());
  parallel_for(loaded.size(), [&](std::size_t i) { report.entries[i] = evaluate_entry(i, loaded[i], params, mode, options); });
  std::vector<double> scores;
  for (const auto& e : report.entries) {
    if (e.ok) scores.push_back(e.score);
    else ++report.skipped;
  }
  if (scores.empty()) throw EmptyFieldError("every manifest entry was skipped");
  report.aggregate = summary_stats(scores);
  report.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline std::vector<LoadedEntry> load_entries(const Manifest& manifest) {
  std::vector<LoadedEntry> loaded(manifest.entries.size());
  parallel_for(manifest.entries.size(), [&](std::size_t i) { loaded[i] = load_entry(manifest.entries[i]); });
  return loaded;
}

/// Missing or unreadable entries are skipped and recorded; a run with every
/// entry skipped throws.
inline BenchReport run_benchmark(const Manifest& manifest, const PipelineParams& params, BenchMode mode,
                                 const BenchOptions& options = {}) {
  const auto loaded = load_entries(manifest);
  return run_loaded(manifest.name, loaded, params, mode, options);
}

inline Json to_json(const BenchReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    Json j{{"image", e.image}, {"ok", e.ok}};
    if (e.ok) {
      j["globalEstimate"] = to_json(e.global_estimate);
      j["globalError"] = e.global_error;
      j["score"] = e.score;
      if (e.pixel_stats) j["pixelStats"] = to_json(*e.pixel_stats);
    } else {
      j["error"] = e.error;
    }
    j["timing"] = {{"elapsedMs", e.elapsed_ms}};
    entries.push_back(j);
  }
  return Json{{"manifest", r.manifest},
              {"mode", to_string(r.mode)},
              {"params", to_json(r.params)},
              {"entries", entries},
              {"aggregate", to_json(r.aggregate)},
              {"skipped", r.skipped},
              {"timing", {{"elapsedMs", r.elapsed_ms}}}};
}

// ---------------------------------------------------------------------------
// Parameter sweep

struct SweepGrid {
  std::vector<std::size_t> betas;
  std::vector<double> sigmas;
  /// values[i][j] = aggregate mean for betas[i], sigmas[j].
  std::vector<std::vector<double>> values;

  double at(std::size_t beta, double sigma) const {
    for (std::size_t i = 0; i < betas.size(); ++i) {
      for (std::size_t j = 0; j < sigmas.size(); ++j) {
        if (betas[i] == beta && sigmas[j] == sigma) return values[i][j];
      }
    }
    throw ConfigError("sweep has no cell for the requested parameters");
  }
};

/// One pixelwise benchmark per (beta, sigma). Images are read once.
inline SweepGrid param_sweep(const Manifest& manifest, const std::vector<std::size_t>& betas,
                             const std::vector<double>& sigmas, const EstimatorId& estimator,
                             PipelineParams base = {}) {
  if (betas.empty() || sigmas.empty()) throw ConfigError("sweep needs at least one beta and one sigma");
  for (const auto& e : manifest.entries) {
    if (!std::holds_alternative<std::string>(e.truth)) {
      throw SpecError("sweep requires per-pixel ground-truth fields for every entry");
    }
  }
  const auto loaded = load_entries(manifest);
  base.estimator = estimator;
  SweepGrid grid{betas, sigmas, std::vector<std::vector<double>>(betas.size(), std::vector<double>(sigmas.size()))};
  for (std::size_t i = 0; i < betas.size(); ++i) {
    for (std::size_t j = 0; j < sigmas.size(); ++j) {
      PipelineParams p = base;
      p.beta = betas[i];
      p.sigma = sigmas[j];
      grid.values[i][j] = run_loaded(manifest.name, loaded, p, BenchMode::pixelwise).aggregate.mean;
    }
  }
  return grid;
}

/// Beta rows, sigma columns, three decimals.
inline std::string sweep_csv(const SweepGrid& g) {
  std::ostringstream out;
  out << "beta\\sigma";
  for (double s : g.sigmas) out << ',' << detail::format_number(s);
  out << '\n';
  out << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < g.betas.size(); ++i) {
    out << g.betas[i];
    for (double v : g.values[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

inline Json to_json(const SweepGrid& g) {
  return Json{{"betas", g.betas}, {"sigmas", g.sigmas}, {"meanPixelwiseError", g.values}};
}

// ---------------------------------------------------------------------------
// Synthetic manifests

inline SynthConfig mean_gray_scene() {
  SynthConfig c;
  c.mean_gray = true;
  return c;
}

struct SynthManifestConfig {
  std::size_t count = 50;
  std::uint64_t seed = 2024;
  SynthConfig scene = mean_gray_scene();
  /// Draw a random pair of illuminants this far apart (degrees); with
  /// `single_illuminant` only the first illuminant is used.
  double min_separation = 20.0;
  double max_separation = 40.0;
  bool single_illuminant = false;
};

/// Writes scene_NNN.png (16-bit linear), scene_NNN_gt.png (field) and
/// manifest.json into `dir`. Returns the manifest path.
inline std::string write_synthetic_manifest(const std::string& dir, const SynthManifestConfig& cfg,
                                            const std::string& name = "synthetic") {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(cfg.seed);
  Manifest m;
  m.name = name;
  for (std::size_t i = 0; i < cfg.count; ++i) {
    SynthConfig sc = cfg.scene;
    if (cfg.single_illuminant) {
      sc.first = random_illuminant(rng);
      sc.second = sc.first;
    } else {
      auto [a, b] = random_illuminant_pair(rng, cfg.min_separation, cfg.max_separation);
      sc.first = a;
      sc.second = b;
    }
    const SynthScene scene = synth_scene(cfg.seed * 1000003ULL + i, sc);
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%03zu", i);
    const auto image_path = (std::filesystem::path(dir) / (std::string(stem) + ".png")).string();
    const auto gt_path = (std::filesystem::path(dir) / (std::string(stem) + "_gt.png")).string();
    save_image(scene.image, image_path, Transfer::linear, 16);
    save_field_png(scene.truth, gt_path);
    ManifestEntry e;
    e.image = image_path;
    e.truth = gt_path;
    m.entries.push_back(e);
  }
  const auto path = (std::filesystem::path(dir) / "manifest.json").string();
  save_manifest(m, path);
  return path;
}

}  // namespace spatialcc
