#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "app.hpp"

namespace spatialcc::app {

namespace {

namespace fs = std::filesystem;

// Thrown for inputs named on the command line that do not exist.
struct MissingInput : Error {
  using Error::Error;
};

struct PipelineFlags {
  std::string algo = "gray-world";
  std::size_t block = 8;
  double sigma = 24.0;
  std::string confidence = "off";
  double saturation = 0.98;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--algo", algo, "Estimator id, e.g. gray-world, shades-of-gray:p=6")->capture_default_str();
    cmd->add_option("--block", block, "Block size beta in pixels")->capture_default_str()->check(CLI::Range(2, 1 << 20));
    cmd->add_option("--sigma", sigma, "Gaussian interpolation sigma in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--confidence", confidence, "off | whiteness")->capture_default_str();
    cmd->add_option("--saturation", saturation, "Clip threshold for block statistics; 0 disables")->capture_default_str();
  }

  PipelineParams params() const {
    PipelineParams p;
    p.beta = block;
    p.sigma = sigma;
    p.estimator = parse_estimator(algo);
    p.confidence = parse_confidence(confidence);
    p.saturation_threshold = saturation;
    p.validate();
    return p;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string out_dir;
  int verbosity = 0;

  // Relative output paths land in --out-dir when one is given.
  std::string output(const std::string& path) const {
    if (path.empty() || out_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(out_dir) / path).string();
  }

  void log(const std::string& line) const {
    if (verbosity > 0) err << line << '\n';
  }
};

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw MissingInput("input not found: " + path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------------------

struct EstimateCmd {
  std::string in;
  PipelineFlags pipe;
  std::string mode = "pixelwise";
  bool srgb = false;
  std::string out_field, out_corrected, out_meta;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--in", in, "Input PNG")->required();
    pipe.add_to(cmd);
    cmd->add_option("--mode", mode, "pixelwise | global")->capture_default_str();
    cmd->add_flag("--srgb", srgb, "Input is sRGB encoded (decoded to linear); outputs are written sRGB too");
    cmd->add_option("--out-field", out_field, "Illuminant field PNG (pixelwise mode only)");
    cmd->add_option("--out-corrected", out_corrected, "Corrected image PNG");
    cmd->add_option("--out-meta", out_meta, "Metadata JSON; printed to stdout when omitted");
  }

  int run(const Context& ctx) {
    const PipelineParams params = pipe.params();
    const bool pixelwise = parse_bench_mode(mode) == BenchMode::pixelwise;
    const Transfer transfer = srgb ? Transfer::srgb : Transfer::linear;
    require_input(in);
    if (!pixelwise && !out_field.empty()) ctx.err << "note: --mode global writes no field; --out-field ignored\n";

    const LinearImage img = load_image(in, transfer);
    const EstimateOutput result = run_estimate(img, params, pixelwise);
    write_estimate_artifacts(result, transfer, ctx.output(out_field), ctx.output(out_corrected), ctx.output(out_meta));
    if (out_meta.empty()) ctx.out << result.meta.dump(2) << '\n';
    ctx.log("estimate: " + std::to_string(result.result.elapsed_ms) + " ms");
    return kOk;
  }
};

struct IllusionCmd {
  std::string spec_path, out;
  bool target_only = false;
  bool srgb = false;
  bool process = false;
  PipelineFlags pipe;
  std::string out_estimates, out_corrected, report;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "Illusion spec JSON")->required();
    cmd->add_option("--out", out, "Stimulus PNG")->required();
    cmd->add_flag("--target-only", target_only, "Replace every non-target pixel by the background color");
    cmd->add_flag("--srgb", srgb, "Write 8-bit sRGB instead of 16-bit linear PNGs");
    cmd->add_flag("--process", process, "Run the pipeline and write estimates, corrected image and shift report");
    pipe.add_to(cmd);
    cmd->add_option("--out-estimates", out_estimates, "Estimate field rendering (default <out>_estimates.png)");
    cmd->add_option("--out-corrected", out_corrected, "Corrected stimulus (default <out>_corrected.png)");
    cmd->add_option("--report", report, "Shift report JSON (default <out>_shift.json)");
  }

  int run(const Context& ctx) {
    const PipelineParams params = pipe.params();
    require_input(spec_path);
    const IllusionSpec spec = illusion_spec_from_json(read_json_file(spec_path));
    const IllusionStimulus stim = generate_illusion(spec);
    const Transfer transfer = srgb ? Transfer::srgb : Transfer::linear;
    const int depth = srgb ? 8 : 16;
    save_image(render_stimulus(stim, target_only), ctx.output(out), transfer, depth);
    if (!process) return kOk;

    const IllusionOutput result = process_illusion(stim, params, target_only);
    const std::string est = ctx.output(out_estimates.empty() ? sibling(out, "_estimates.png") : out_estimates);
    const std::string cor = ctx.output(out_corrected.empty() ? sibling(out, "_corrected.png") : out_corrected);
    const std::string rep = ctx.output(report.empty() ? sibling(out, "_shift.json") : report);
    save_image(result.estimates_view, est, transfer, depth);
    save_image(result.corrected_view, cor, transfer, depth);
    write_json_file(result.report, rep);
    for (const auto& r : result.run.shift.regions) {
      ctx.out << "region " << r.label << ": delta " << r.delta << " deg\n";
    }
    ctx.out << "mean delta " << result.run.shift.mean_delta << " deg\n";
    return kOk;
  }
};

struct LadderCmd {
  std::string dir;

  void add_to(CLI::App* cmd) { cmd->add_option("--dir", dir, "Directory for the default ladder spec files")->required(); }

  int run(const Context& ctx) {
    const std::string target = ctx.output(dir);
    fs::create_directories(target);
    const auto ladder = default_illusion_ladder();
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const auto path = fs::path(target) / ("ladder_" + std::to_string(i) + "_" + to_string(ladder[i].pattern) + ".json");
      write_json_file(to_json(ladder[i]), path.string());
      ctx.out << path.string() << '\n';
    }
    return kOk;
  }
};

struct BenchmarkCmd {
  std::string manifest, mode = "pixelwise", report;
  PipelineFlags pipe;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Manifest JSON")->required();
    pipe.add_to(cmd);
    cmd->add_option("--mode", mode, "pixelwise | global")->capture_default_str();
    cmd->add_option("--report", report, "Report JSON; printed to stdout when omitted");
  }

  int run(const Context& ctx) {
    const PipelineParams params = pipe.params();
    const BenchMode m = parse_bench_mode(mode);
    require_input(manifest);
    const Manifest man = load_manifest(manifest);
    const BenchReport r = run_benchmark(man, params, m);
    const Json j = to_json(r);
    if (report.empty()) ctx.out << j.dump(2) << '\n';
    else write_json_file(j, ctx.output(report));
    for (const auto& e : r.entries) {
      if (!e.ok) ctx.err << "skipped " << e.image << ": " << e.error << '\n';
    }
    ctx.log("benchmark mean " + std::to_string(r.aggregate.mean) + " deg over " + std::to_string(r.aggregate.count));
    return kOk;
  }
};

struct SweepCmd {
  std::string manifest, out, json;
  std::vector<std::size_t> betas;
  std::vector<double> sigmas;
  PipelineFlags pipe;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Manifest JSON with field ground truth")->required();
    cmd->add_option("--betas", betas, "Comma separated block sizes")->required()->delimiter(',');
    cmd->add_option("--sigmas", sigmas, "Comma separated sigmas")->required()->delimiter(',');
    cmd->add_option("--algo", pipe.algo, "Estimator id")->capture_default_str();
    cmd->add_option("--confidence", pipe.confidence, "off | whiteness")->capture_default_str();
    cmd->add_option("--saturation", pipe.saturation, "Clip threshold; 0 disables")->capture_default_str();
    cmd->add_option("--out", out, "CSV output; printed to stdout when omitted");
    cmd->add_option("--json", json, "Also write the grid as JSON");
  }

  int run(const Context& ctx) {
    PipelineParams base = pipe.params();
    for (auto b : betas) {
      if (b < 2) throw ConfigError("--betas: block size must be at least 2");
    }
    for (auto s : sigmas) {
      if (!(s > 0.0)) throw ConfigError("--sigmas: sigma must be positive");
    }
    require_input(manifest);
    const Manifest man = load_manifest(manifest);
    const SweepGrid grid = param_sweep(man, betas, sigmas, base.estimator, base);
    const std::string csv = sweep_csv(grid);
    if (out.empty()) {
      ctx.out << csv;
    } else {
      std::ofstream f(ctx.output(out));
      if (!(f << csv)) throw IoError("cannot write " + out);
    }
    if (!json.empty()) write_json_file(to_json(grid), ctx.output(json));
    return kOk;
  }
};

struct SynthCmd {
  std::string dir;
  SynthManifestConfig cfg;
  std::string blend = "half-split";
  bool no_mean_gray = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dir", dir, "Output directory")->required();
    cmd->add_option("--count", cfg.count, "Number of scenes")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
    cmd->add_option("--width", cfg.scene.width, "Scene width")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--height", cfg.scene.height, "Scene height")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--blend", blend, "half-split | linear-ramp")->capture_default_str();
    cmd->add_flag("--single", cfg.single_illuminant, "One illuminant per scene");
    cmd->add_flag("--no-mean-gray", no_mean_gray, "Keep raw Mondrian reflectances");
    cmd->add_option("--min-sep", cfg.min_separation, "Minimum illuminant separation (deg)")->capture_default_str();
    cmd->add_option("--max-sep", cfg.max_separation, "Maximum illuminant separation (deg)")->capture_default_str();
  }

  int run(const Context& ctx) {
    if (blend == "half-split") cfg.scene.blend = Blend::half_split;
    else if (blend == "linear-ramp") cfg.scene.blend = Blend::linear_ramp;
    else throw ConfigError("--blend must be half-split or linear-ramp");
    if (!(cfg.min_separation >= 0.0 && cfg.min_separation <= cfg.max_separation)) {
      throw ConfigError("--min-sep must be non-negative and not above --max-sep");
    }
    cfg.scene.mean_gray = !no_mean_gray;
    ctx.out << write_synthetic_manifest(ctx.output(dir), cfg) << '\n';
    return kOk;
  }
};

struct ServeCmd {
  ServerConfig cfg;
  std::string static_dir, artifacts;
  std::size_t max_size = 4096;
  long ttl = 600;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--port", cfg.port, "Port (0 picks a free one)")->capture_default_str()->check(CLI::Range(0, 65535));
    cmd->add_option("--host", cfg.host, "Bind address")->capture_default_str();
    cmd->add_option("--static", static_dir, "Directory served at /");
    cmd->add_option("--max-size", max_size, "Largest accepted width and height")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--artifacts", artifacts, "Artifact directory (default under the temp dir)");
    cmd->add_option("--ttl", ttl, "Artifact lifetime in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  }

  int run(const Context& ctx) {
    if (!static_dir.empty()) {
      if (!fs::is_directory(static_dir)) throw MissingInput("static directory not found: " + static_dir);
      cfg.static_dir = static_dir;
    }
    cfg.max_width = cfg.max_height = max_size;
    cfg.artifact_dir = artifacts;
    cfg.artifact_ttl = std::chrono::seconds(ttl);
    ApiServer server(cfg);
    const int port = server.bind();
    ctx.out << "listening on http://" << cfg.host << ':' << port << std::endl;
    server.listen();
    return kOk;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatially varying color constancy: estimate, illusions, benchmarks, HTTP API"};
  app.require_subcommand(1);
  Context ctx{out, err, {}, 0};
  app.add_option("--out-dir", ctx.out_dir, "Base directory for relative output paths");
  app.add_flag("-v,--verbose", ctx.verbosity, "Log timings to stderr");

  EstimateCmd estimate;
  IllusionCmd illusion;
  LadderCmd ladder;
  BenchmarkCmd benchmark;
  SweepCmd sweep;
  SynthCmd synth;
  ServeCmd serve;
  estimate.add_to(app.add_subcommand("estimate", "Estimate the illuminant of one image"));
  illusion.add_to(app.add_subcommand("illusion", "Render (and optionally process) an assimilation stimulus"));
  ladder.add_to(app.add_subcommand("ladder", "Write the default illusion ladder specs"));
  benchmark.add_to(app.add_subcommand("benchmark", "Score a manifest"));
  sweep.add_to(app.add_subcommand("sweep", "Beta x sigma grid of mean pixel-wise errors"));
  synth.add_to(app.add_subcommand("synth", "Write a synthetic Mondrian manifest"));
  serve.add_to(app.add_subcommand("serve", "HTTP API for the explorer UI"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (!ctx.out_dir.empty()) fs::create_directories(ctx.out_dir);
  try {
    const std::string name = sub->get_name();
    if (name == "estimate") return estimate.run(ctx);
    if (name == "illusion") return illusion.run(ctx);
    if (name == "ladder") return ladder.run(ctx);
    if (name == "benchmark") return benchmark.run(ctx);
    if (name == "sweep") return sweep.run(ctx);
    if (name == "synth") return synth.run(ctx);
    if (name == "serve") return serve.run(ctx);
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << '\n';
    return kNoInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace spatialcc::app
