#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "app.hpp"
#include "httplib.h"

namespace spatialcc::app {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ArtifactStore

ArtifactStore::ArtifactStore(fs::path root, std::chrono::seconds ttl) : root_(std::move(root)), ttl_(ttl) {
  if (root_.empty()) root_ = fs::temp_directory_path() / ("spatialcc-artifacts-" + std::to_string(::getpid()));
  fs::create_directories(root_ / ".staging");
}

fs::path ArtifactStore::stage() {
  std::uint64_t n;
  {
    std::lock_guard lock(mutex_);
    n = counter_++;
  }
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  fs::path dir = root_ / ".staging" / (std::to_string(n) + "-" + std::to_string(stamp));
  fs::create_directories(dir);
  return dir;
}

void ArtifactStore::publish(const fs::path& staged, const std::string& id) {
  std::error_code ec;
  fs::rename(staged, root_ / id, ec);
  // Lost the race to an identical request (or it is still around): keep the existing copy.
  if (ec) fs::remove_all(staged, ec);
}

std::optional<fs::path> ArtifactStore::find(const std::string& id, const std::string& name) const {
  auto plain = [](const std::string& s) {
    if (s.empty() || s[0] == '.') return false;
    for (char c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    }
    return true;
  };
  if (!plain(id) || !plain(name)) return std::nullopt;
  fs::path p = root_ / id / name;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return p;
}

std::size_t ArtifactStore::sweep() {
  std::lock_guard lock(mutex_);
  const auto cutoff = fs::file_time_type::clock::now() - ttl_;
  std::size_t removed = 0;
  std::error_code ec;
  for (const fs::path& dir : std::array<fs::path, 2>{root_, root_ / ".staging"}) {
    std::vector<fs::path> stale;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (!entry.is_directory(ec) || entry.path().filename() == ".staging") continue;
      const auto t = fs::last_write_time(entry.path(), ec);
      if (!ec && t < cutoff) stale.push_back(entry.path());
    }
    for (const auto& p : stale) {
      if (fs::remove_all(p, ec) > 0) ++removed;
    }
  }
  return removed;
}

// ---------------------------------------------------------------------------
// Server

namespace {

// Malformed request; becomes a 400 (or the given status) with a JSON body.
struct HttpError : std::runtime_error {
  int status;
  HttpError(int s, const std::string& what) : std::runtime_error(what), status(s) {}
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}, {"status", status}});
}

Json parse_json_body(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw HttpError(400, std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string content_type_for(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

// Pulls the non-pipeline keys out of a params object.
struct RequestOptions {
  bool pixelwise = true;
  Transfer transfer = Transfer::linear;
  bool target_only = false;
};

RequestOptions take_options(Json& params) {
  RequestOptions o;
  try {
    if (params.contains("mode")) {
      o.pixelwise = parse_bench_mode(params["mode"].get<std::string>()) == BenchMode::pixelwise;
      params.erase("mode");
    }
    if (params.contains("transfer")) {
      o.transfer = parse_transfer(params["transfer"].get<std::string>());
      params.erase("transfer");
    }
    if (params.contains("targetOnly")) {
      o.target_only = params["targetOnly"].get<bool>();
      params.erase("targetOnly");
    }
  } catch (const Json::exception& e) {
    throw HttpError(400, std::string("malformed options: ") + e.what());
  }
  return o;
}

}  // namespace

struct ApiServer::Impl {
  ServerConfig config;
  ArtifactStore store;
  httplib::Server http;
  std::atomic<bool> bound{false};

  explicit Impl(ServerConfig c) : config(std::move(c)), store(config.artifact_dir, config.artifact_ttl) {
    http.set_payload_max_length(std::size_t{512} << 20);
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not found" : "request failed");
    });
    if (config.static_dir && !http.set_mount_point("/", *config.static_dir)) {
      throw IoError("cannot serve static directory " + *config.static_dir);
    }

    http.Get("/api/algorithms", [](const httplib::Request&, httplib::Response& res) {
      Json ids = Json::array();
      for (const auto& id : estimator_registry()) ids.push_back(to_string(id));
      send_json(res, 200, Json{{"algorithms", ids}});
    });
    http.Post("/api/estimate", guarded([this](const httplib::Request& q, httplib::Response& r) { estimate(q, r); }));
    http.Get("/api/illusion", guarded([this](const httplib::Request& q, httplib::Response& r) { illusion(q, r); }));
    http.Post("/api/illusion/process",
              guarded([this](const httplib::Request& q, httplib::Response& r) { illusion_process(q, r); }));
    http.Get(R"(/api/artifacts/([^/]+)/([^/]+))", [this](const httplib::Request& q, httplib::Response& r) {
      const auto path = store.find(q.matches[1], q.matches[2]);
      if (!path) return send_error(r, 404, "artifact not found or expired");
      std::ifstream in(*path, std::ios::binary);
      r.set_content(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()),
                    content_type_for(*path));
    });
  }

  // Maps library and request errors to JSON error responses.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.what());
      } catch (const ConfigError& e) {
        send_error(res, 400, e.what());
      } catch (const SpecError& e) {
        send_error(res, 400, e.what());
      } catch (const FormatError& e) {
        send_error(res, 400, e.what());
      } catch (const DegenerateImageError& e) {
        send_error(res, 400, e.what());
      }
    };
  }

  void check_size(std::size_t w, std::size_t h) const {
    if (w > config.max_width || h > config.max_height) {
      throw HttpError(413, "image " + std::to_string(w) + "x" + std::to_string(h) + " exceeds the limit " +
                               std::to_string(config.max_width) + "x" + std::to_string(config.max_height));
    }
  }

  std::string url(const std::string& id, const std::string& name) const { return "/api/artifacts/" + id + "/" + name; }

  void estimate(const httplib::Request& req, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    if (!req.is_multipart_form_data()) throw HttpError(400, "expected multipart/form-data with an image part");
    if (!req.has_file("image")) throw HttpError(400, "missing multipart part 'image'");
    const std::string& bytes = req.get_file_value("image").content;
    Json params_json = req.has_file("params") ? parse_json_body(req.get_file_value("params").content, "params")
                                              : Json::object();
    if (!params_json.is_object()) throw HttpError(400, "params must be a JSON object");
    const RequestOptions opt = take_options(params_json);
    const PipelineParams params = pipeline_params_from_json(params_json);

    const auto [w, h] = png_dimensions(bytes);
    check_size(w, h);
    const LinearImage img = decode_png(bytes, opt.transfer);
    const EstimateOutput out = run_estimate(img, params, opt.pixelwise);

    const std::string key = to_json(params).dump() + (opt.pixelwise ? "p" : "g") + to_string(opt.transfer);
    const std::string id = hex(fnv1a(bytes, fnv1a(key)));
    store.sweep();
    const fs::path staged = store.stage();
    write_estimate_artifacts(out, opt.transfer, opt.pixelwise ? (staged / "field.png").string() : "",
                             (staged / "corrected.png").string(), (staged / "meta.json").string());
    if (opt.pixelwise) save_image(render_field(out.result.field), (staged / "field_view.png").string(), Transfer::srgb, 8);
    store.publish(staged, id);

    Json body = out.meta;
    body.erase("timing");
    body["correctedUrl"] = url(id, "corrected.png");
    body["metaUrl"] = url(id, "meta.json");
    if (opt.pixelwise) {
      body["fieldUrl"] = url(id, "field.png");
      body["fieldViewUrl"] = url(id, "field_view.png");
    }
    body["timings"] = {{"pipelineMs", out.result.elapsed_ms},
                       {"requestMs", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()}};
    send_json(res, 200, body);
  }

  IllusionStimulus stimulus_from(const Json& spec_json) const {
    const IllusionSpec spec = illusion_spec_from_json(spec_json);
    check_size(spec.width, spec.height);
    return generate_illusion(spec);
  }

  void illusion(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("spec")) throw HttpError(400, "missing query parameter 'spec'");
    Json options = Json::object();
    if (req.has_param("targetOnly")) options["targetOnly"] = req.get_param_value("targetOnly") == "1" || req.get_param_value("targetOnly") == "true";
    if (req.has_param("transfer")) options["transfer"] = req.get_param_value("transfer");
    const RequestOptions opt = take_options(options);
    const IllusionStimulus stim = stimulus_from(parse_json_body(req.get_param_value("spec"), "spec"));
    res.set_content(encode_png(render_stimulus(stim, opt.target_only), opt.transfer, opt.transfer == Transfer::srgb ? 8 : 16),
                    "image/png");
  }

  void illusion_process(const httplib::Request& req, httplib::Response& res) {
    Json body = parse_json_body(req.body, "request body");
    if (!body.is_object() || !body.contains("spec")) throw HttpError(400, "body must be an object with a 'spec' key");
    Json params_json = body.value("params", Json::object());
    if (!params_json.is_object()) throw HttpError(400, "params must be a JSON object");
    Json options = Json::object();
    for (const char* k : {"targetOnly", "transfer"}) {
      if (body.contains(k)) options[k] = body[k];
    }
    const RequestOptions opt = take_options(options);
    const PipelineParams params = pipeline_params_from_json(params_json);
    const IllusionStimulus stim = stimulus_from(body["spec"]);
    const IllusionOutput out = process_illusion(stim, params, opt.target_only);

    const int depth = opt.transfer == Transfer::srgb ? 8 : 16;
    const std::string key = to_json(stim.spec).dump() + to_json(params).dump() + (opt.target_only ? "t" : "f") +
                            to_string(opt.transfer);
    const std::string id = hex(fnv1a(key));
    store.sweep();
    const fs::path staged = store.stage();
    save_image(render_stimulus(stim, opt.target_only), (staged / "input.png").string(), opt.transfer, depth);
    save_image(out.estimates_view, (staged / "estimates.png").string(), opt.transfer, depth);
    save_image(out.corrected_view, (staged / "corrected.png").string(), opt.transfer, depth);
    write_json_file(out.report, (staged / "report.json").string());
    store.publish(staged, id);

    Json reply = out.report;
    reply["inputUrl"] = url(id, "input.png");
    reply["outputUrl"] = url(id, "estimates.png");
    reply["correctedUrl"] = url(id, "corrected.png");
    reply["reportUrl"] = url(id, "report.json");
    send_json(res, 200, reply);
  }
};

ApiServer::ApiServer(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(impl_->config.host);
    if (port < 0) throw IoError("cannot bind " + impl_->config.host);
  } else if (!impl_->http.bind_to_port(impl_->config.host, port)) {
    throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void ApiServer::listen() {
  if (!impl_->bound) throw ConfigError("bind() before listen()");
  impl_->http.listen_after_bind();
}

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

ArtifactStore& ApiServer::artifacts() { return impl_->store; }

}  // namespace spatialcc::app
