#pragma once

// JSON forms of specs, parameters and reports. Keys are lowerCamelCase.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spatialcc/errors.hpp"
#include "spatialcc/eval.hpp"
#include "spatialcc/illusion.hpp"
#include "spatialcc/pipeline.hpp"

namespace spatialcc {

using Json = nlohmann::json;

inline Json to_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

namespace detail {

// Accumulates "field: problem" messages so a failed parse lists everything at once.
class FieldErrors {
 public:
  void add(std::string field, std::string problem) { messages_.push_back(std::move(field) + ": " + std::move(problem)); }
  bool empty() const { return messages_.empty(); }
  [[noreturn]] void raise(const std::string& what) const {
    std::string text = what;
    for (const auto& m : messages_) text += "\n  " + m;
    throw SpecError(text);
  }
  void throw_if_any(const std::string& what) const {
    if (!empty()) raise(what);
  }

 private:
  std::vector<std::string> messages_;
};

inline bool read_vec3(const Json& j, Vec3& out) {
  if (!j.is_array() || j.size() != 3) return false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) return false;
    out[i] = j[i].get<double>();
  }
  return true;
}

template <typename T>
bool read_number(const Json& j, T& out) {
  if (!j.is_number()) return false;
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) return false;
    if (j.is_number_integer() && j.get<long long>() < 0) return false;
  }
  out = j.get<T>();
  return true;
}

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed, const std::string& prefix,
                                FieldErrors& errors) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) errors.add(prefix + it.key(), "unknown field");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IllusionSpec

inline Json to_json(const IllusionSpec& s) {
  Json rects = Json::array();
  for (const auto& r : s.geometry.rects) rects.push_back({{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}});
  Json disks = Json::array();
  for (const auto& d : s.geometry.disks) disks.push_back({{"cx", d.cx}, {"cy", d.cy}, {"radius", d.radius}});
  Json inducers = Json::array();
  for (const auto& c : s.inducer_colors) inducers.push_back(to_json(c));
  return Json{{"pattern", to_string(s.pattern)},
              {"canvas", {{"width", s.width}, {"height", s.height}}},
              {"background", to_json(s.background)},
              {"targetColor", to_json(s.target_color)},
              {"inducerColors", inducers},
              {"inducerThickness", s.inducer_thickness},
              {"inducerFrequency", s.inducer_frequency},
              {"targetGeometry",
               {{"rects", rects},
                {"disks", disks},
                {"targetFraction", s.geometry.target_fraction},
                {"mixedColors", s.geometry.mixed_colors}}},
              {"seed", s.seed}};
}

/// Parses and validates. Omitted fields keep their defaults; unknown or
/// mistyped fields are collected and reported together as a SpecError.
inline IllusionSpec illusion_spec_from_json(const Json& j) {
  detail::FieldErrors errors;
  if (!j.is_object()) throw SpecError("illusion spec must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"pattern", "canvas", "background", "targetColor", "inducerColors", "inducerThickness",
                               "inducerFrequency", "targetGeometry", "seed"},
                              "", errors);
  IllusionSpec s;
  if (j.contains("pattern")) {
    if (!j["pattern"].is_string()) {
      errors.add("pattern", "must be a string");
    } else {
      try {
        s.pattern = parse_pattern(j["pattern"].get<std::string>());
      } catch (const SpecError& e) {
        errors.add("pattern", e.what());
      }
    }
  }
  if (j.contains("canvas")) {
    const auto& c = j["canvas"];
    if (!c.is_object()) {
      errors.add("canvas", "must be an object");
    } else {
      detail::reject_unknown_keys(c, {"width", "height"}, "canvas.", errors);
      if (c.contains("width") && !detail::read_number(c["width"], s.width)) errors.add("canvas.width", "must be a non-negative integer");
      if (c.contains("height") && !detail::read_number(c["height"], s.height)) errors.add("canvas.height", "must be a non-negative integer");
    }
  }
  if (j.contains("background") && !detail::read_vec3(j["background"], s.background)) errors.add("background", "must be [r,g,b]");
  if (j.contains("targetColor") && !detail::read_vec3(j["targetColor"], s.target_color)) errors.add("targetColor", "must be [r,g,b]");
  if (j.contains("inducerColors")) {
    const auto& arr = j["inducerColors"];
    if (!arr.is_array()) {
      errors.add("inducerColors", "must be an array of [r,g,b]");
    } else {
      s.inducer_colors.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Vec3 c{};
        if (!detail::read_vec3(arr[i], c)) {
          errors.add("inducerColors[" + std::to_string(i) + "]", "must be [r,g,b]");
        } else {
          s.inducer_colors.push_back(c);
        }
      }
    }
  }
  if (j.contains("inducerThickness") && !detail::read_number(j["inducerThickness"], s.inducer_thickness)) errors.add("inducerThickness", "must be a number");
  if (j.contains("inducerFrequency") && !detail::read_number(j["inducerFrequency"], s.inducer_frequency)) errors.add("inducerFrequency", "must be a number");
  if (j.contains("seed") && !detail::read_number(j["seed"], s.seed)) errors.add("seed", "must be a non-negative integer");
  if (j.contains("targetGeometry")) {
    const auto& g = j["targetGeometry"];
    if (!g.is_object()) {
      errors.add("targetGeometry", "must be an object");
    } else {
      detail::reject_unknown_keys(g, {"rects", "disks", "targetFraction", "mixedColors"}, "targetGeometry.", errors);
      if (g.contains("rects")) {
        if (!g["rects"].is_array()) errors.add("targetGeometry.rects", "must be an array");
        else {
          for (std::size_t i = 0; i < g["rects"].size(); ++i) {
            const auto& r = g["rects"][i];
            TargetRect rect;
            const bool ok = r.is_object() && r.contains("x") && r.contains("y") && r.contains("width") &&
                            r.contains("height") && detail::read_number(r["x"], rect.x) &&
                            detail::read_number(r["y"], rect.y) && detail::read_number(r["width"], rect.width) &&
                            detail::read_number(r["height"], rect.height);
            if (!ok) errors.add("targetGeometry.rects[" + std::to_string(i) + "]", "needs numeric x, y, width, height");
            else s.geometry.rects.push_back(rect);
          }
        }
      }
      if (g.contains("disks")) {
        if (!g["disks"].is_array()) errors.add("targetGeometry.disks", "must be an array");
        else {
          for (std::size_t i = 0; i < g["disks"].size(); ++i) {
            const auto& d = g["disks"][i];
            TargetDisk disk;
            const bool ok = d.is_object() && d.contains("cx") && d.contains("cy") && d.contains("radius") &&
                            detail::read_number(d["cx"], disk.cx) && detail::read_number(d["cy"], disk.cy) &&
                            detail::read_number(d["radius"], disk.radius);
            if (!ok) errors.add("targetGeometry.disks[" + std::to_string(i) + "]", "needs numeric cx, cy, radius");
            else s.geometry.disks.push_back(disk);
          }
        }
      }
      if (g.contains("targetFraction") && !detail::read_number(g["targetFraction"], s.geometry.target_fraction)) {
        errors.add("targetGeometry.targetFraction", "must be a number");
      }
      if (g.contains("mixedColors")) {
        if (!g["mixedColors"].is_boolean()) errors.add("targetGeometry.mixedColors", "must be a boolean");
        else s.geometry.mixed_colors = g["mixedColors"].get<bool>();
      }
    }
  }
  errors.throw_if_any("invalid illusion spec");
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// Pipeline parameters and results

inline Json to_json(const PipelineParams& p) {
  return Json{{"beta", p.beta},
              {"sigma", p.sigma},
              {"algorithm", to_string(p.estimator)},
              {"confidence", to_string(p.confidence)},
              {"fallback", to_json(p.fallback.rgb())},
              {"saturationThreshold", p.saturation_threshold}};
}

/// Reads the keys present in `j` on top of `base`. Throws ConfigError.
inline PipelineParams pipeline_params_from_json(const Json& j, PipelineParams base = {}) {
  if (!j.is_object()) throw ConfigError("params must be a JSON object");
  try {
    if (j.contains("beta")) {
      const auto& b = j["beta"];
      if (!b.is_number_integer() && !b.is_number_unsigned()) throw ConfigError("beta must be an integer");
      if (b.get<long long>() < 2) throw ConfigError("beta must be at least 2");
      base.beta = b.get<std::size_t>();
    }
    if (j.contains("sigma")) {
      if (!j["sigma"].is_number()) throw ConfigError("sigma must be a number");
      base.sigma = j["sigma"].get<double>();
    }
    if (j.contains("algorithm")) base.estimator = parse_estimator(j["algorithm"].get<std::string>());
    if (j.contains("confidence")) base.confidence = parse_confidence(j["confidence"].get<std::string>());
    if (j.contains("saturationThreshold")) base.saturation_threshold = j["saturationThreshold"].get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed params: ") + e.what());
  }
  base.validate();
  return base;
}

inline Json to_json(const ErrorStats& s) {
  return Json{{"mean", s.mean},
              {"median", s.median},
              {"best25Mean", s.best25_mean},
              {"worst25Mean", s.worst25_mean},
              {"max", s.max},
              {"count", s.count}};
}

inline ErrorStats error_stats_from_json(const Json& j) {
  ErrorStats s;
  s.mean = j.at("mean").get<double>();
  s.median = j.at("median").get<double>();
  s.best25_mean = j.at("best25Mean").get<double>();
  s.worst25_mean = j.at("worst25Mean").get<double>();
  s.max = j.at("max").get<double>();
  s.count = j.at("count").get<std::size_t>();
  return s;
}

/// Sidecar metadata for an estimate run.
inline Json estimate_meta(const PipelineResult& r, const PipelineParams& p, const std::string& mode) {
  Json degenerate = Json::array();
  for (std::size_t i = 0; i < r.sparse.entries.size(); ++i) {
    const auto& e = r.sparse.entries[i];
    if (e.degenerate) degenerate.push_back({{"block", i}, {"x", e.x}, {"y", e.y}});
  }
  return Json{{"params", to_json(p)},
              {"mode", mode},
              {"width", r.sparse.width},
              {"height", r.sparse.height},
              {"globalEstimate", to_json(r.global.rgb())},
              {"flags",
               {{"degenerateBlocks", degenerate},
                {"degenerateBlockCount", r.degenerate_blocks},
                {"interpolationFallbackPixels", r.fallback_pixels},
                {"confidenceDegenerate", r.confidence_degenerate}}},
              {"timing", {{"pipelineMs", r.elapsed_ms}}}};
}

inline Json to_json(const ShiftReport& report) {
  Json regions = Json::array();
  for (const auto& r : report.regions) {
    regions.push_back({{"label", r.label},
                       {"pixels", r.pixels},
                       {"bounds", {{"x", r.bounds.x}, {"y", r.bounds.y}, {"width", r.bounds.width}, {"height", r.bounds.height}}},
                       {"before", to_json(r.before)},
                       {"after", to_json(r.after)},
                       {"inducer", to_json(r.inducer)},
                       {"hasInducer", r.has_inducer},
                       {"angleBefore", r.angle_before},
                       {"angleAfter", r.angle_after},
                       {"delta", r.delta}});
  }
  return Json{{"regions", regions}, {"meanDelta", report.mean_delta}, {"minDelta", report.min_delta}};
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SpecError(path + ": invalid JSON: " + e.what());
  }
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spatialcc
