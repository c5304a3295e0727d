#pragma once

// Command implementations shared by the CLI binary, the HTTP server and the tests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spatialcc/bench.hpp"
#include "spatialcc/illusion.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/serialize.hpp"

namespace spatialcc::app {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kNoInput = 2,
  kUsage = 64,
  kDataError = 65,
};

// ---------------------------------------------------------------------------
// Single code path for estimate runs (CLI and /api/estimate)

struct EstimateOutput {
  PipelineResult result;
  LinearImage corrected;
  Json meta;
  bool pixelwise = true;
};

EstimateOutput run_estimate(const LinearImage& img, const PipelineParams& params, bool pixelwise);

/// Writes whichever paths are non-empty. The field is only written in pixelwise mode.
void write_estimate_artifacts(const EstimateOutput& out, Transfer transfer, const std::string& field_path,
                              const std::string& corrected_path, const std::string& meta_path);

// ---------------------------------------------------------------------------
// Illusions (CLI and /api/illusion*)

/// Fill used for non-target pixels in target-only views.
Vec3 target_only_fill(const IllusionSpec& spec);

/// The stimulus, optionally reduced to its targets.
LinearImage render_stimulus(const IllusionStimulus& stim, bool target_only);

struct IllusionOutput {
  IllusionRun run;
  LinearImage estimates_view;
  LinearImage corrected_view;
  Json report;
};

IllusionOutput process_illusion(const IllusionStimulus& stim, const PipelineParams& params, bool target_only);

// ---------------------------------------------------------------------------
// PNG byte helpers (the codec is file based)

std::string encode_png(const LinearImage& img, Transfer transfer, int depth);
LinearImage decode_png(const std::string& bytes, Transfer transfer);

/// Width and height from the IHDR chunk without decoding. Throws FormatError.
std::pair<std::size_t, std::size_t> png_dimensions(const std::string& bytes);

// ---------------------------------------------------------------------------
// CLI

/// Parses and runs one subcommand. Never throws; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// HTTP server

/// Result directories named by a content hash. Writers stage into a fresh
/// private directory and publish with an atomic rename; a sweep drops
/// published directories older than the TTL.
class ArtifactStore {
 public:
  ArtifactStore(std::filesystem::path root, std::chrono::seconds ttl);

  const std::filesystem::path& root() const { return root_; }

  /// A new empty staging directory.
  std::filesystem::path stage();

  /// Moves `staged` to `id`. If `id` already exists the staged copy is discarded.
  void publish(const std::filesystem::path& staged, const std::string& id);

  /// Path of a published artifact, or nullopt when missing or not a plain name.
  std::optional<std::filesystem::path> find(const std::string& id, const std::string& name) const;

  /// Removes published and staging directories older than the TTL. Returns how many were removed.
  std::size_t sweep();

 private:
  std::filesystem::path root_;
  std::chrono::seconds ttl_;
  std::mutex mutex_;
  std::uint64_t counter_ = 0;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> static_dir;
  std::size_t max_width = 4096;
  std::size_t max_height = 4096;
  std::filesystem::path artifact_dir;  // empty: a directory under the system temp dir
  std::chrono::seconds artifact_ttl{600};
};

class ApiServer {
 public:
  explicit ApiServer(ServerConfig config);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind();
  /// Serves until stop(). Call bind() first.
  void listen();
  void stop();
  ArtifactStore& artifacts();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// 64-bit FNV-1a, used for content-addressed artifact ids.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace spatialcc::app
