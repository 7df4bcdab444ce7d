#include "defgrid/workbench/service.hpp"

#include "defgrid/errors.hpp"
#include "defgrid/workbench/base64.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <sodium.h>
#include <spdlog/spdlog.h>

#include <algorithm>

namespace defgrid::workbench {

namespace {

using Json = nlohmann::ordered_json;

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  Json body;
  body["error"] = message;
  reply(res, status, body);
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const HttpError& e) {
      reply_error(res, e.status(), e.what());
    } catch (const Json::exception& e) {
      reply_error(res, 422, fmt::format("invalid request body: {}", e.what()));
    } catch (const std::exception& e) {
      if (is_user_error(e)) {
        reply_error(res, 422, e.what());
      } else {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        reply_error(res, 500, e.what());
      }
    }
  };
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json body = Json::parse(req.body);
  if (!body.is_object()) throw HttpError(422, "request body must be a JSON object");
  return body;
}

Json grid_json(const DeformedGrid& grid) { return Json::parse(grid_to_json(grid)); }

std::vector<Vec2> points(const Json& j, const char* what) {
  if (!j.is_array()) throw HttpError(422, fmt::format("'{}' must be an array", what));
  std::vector<Vec2> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw HttpError(422, fmt::format("'{}' entries must be [x, y] pairs", what));
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

OptimizerConfig optimizer_from_json(const Json& body, OptimizerConfig config) {
  config.iterations = body.value("iters", config.iterations);
  if (body.contains("step_size")) config.step_size = body["step_size"].get<double>();
  config.step_decay = body.value("step_decay", config.step_decay);
  config.max_offset = body.value("max_offset", config.max_offset);
  if (body.contains("flip_guard")) {
    config.flip_guard = parse_flip_guard(body["flip_guard"].get<std::string>());
  }
  if (body.contains("weights")) {
    const Json& w = body["weights"];
    auto& lw = config.weights;
    lw.lambda_recons = w.value("lambda_recons", lw.lambda_recons);
    lw.lambda_area = w.value("lambda_area", lw.lambda_area);
    lw.lambda_lap = w.value("lambda_lap", lw.lambda_lap);
    lw.delta = w.value("delta", lw.delta);
    lw.window_radius = w.value("window_radius", lw.window_radius);
    if (w.contains("mean_mode")) lw.mean_mode = parse_mean_mode(w["mean_mode"].get<std::string>());
  }
  config.validate();
  return config;
}

Json record_json(const IterationRecord& r) { return Json::parse(iteration_to_json(r)); }

void check_revision(const Json& body, std::uint64_t current) {
  if (body.contains("revision") && body["revision"].get<std::uint64_t>() != current) {
    throw HttpError(409, fmt::format("stale revision {} (current {})",
                                     body["revision"].get<std::uint64_t>(), current));
  }
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (sodium_init() < 0) throw Error("libsodium failed to initialize");
  routes();
}

int Service::bind_any(const std::string& host) { return server_.bind_to_any_port(host); }

bool Service::listen(const std::string& host, int port) { return server_.listen(host, port); }

bool Service::serve() { return server_.listen_after_bind(); }

std::size_t Service::session_count() const {
  std::lock_guard lock(store_mutex_);
  return sessions_.size();
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::lock_guard lock(store_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, fmt::format("unknown session '{}'", id));
  return it->second;
}

std::string Service::new_id() {
  std::uint8_t raw[12];
  randombytes_buf(raw, sizeof raw);
  std::string id;
  for (const std::uint8_t b : raw) id += fmt::format("{:02x}", b);
  return id;
}

void Service::routes() {
  server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, Json{{"ok", true}});
  });

  server_.Post("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const Json body = parse_body(req);
    if (!body.contains("image")) throw HttpError(422, "missing field 'image'");
    auto session = std::make_shared<Session>();
    session->image = decode_image(base64_decode(body["image"].get<std::string>()));
    check_image_limits(session->image);
    session->features = image_to_features(session->image);
    GridSpec spec = options_.grid;
    if (body.contains("quads")) spec = parse_quads(body["quads"].get<std::string>());
    if (body.contains("variant")) {
      spec.variant = parse_topology_variant(body["variant"].get<std::string>());
    }
    OptimizerConfig none = options_.optimizer;
    none.iterations = 0;
    session->grid = fit_grid(session->features, spec, none).final_grid;
    session->id = new_id();
    {
      std::lock_guard lock(store_mutex_);
      sessions_[session->id] = session;
    }
    spdlog::info("session {} created ({}x{}, {}x{} quads)", session->id, session->image.width,
                 session->image.height, spec.rows, spec.cols);
    Json out;
    out["id"] = session->id;
    out["revision"] = session->revision;
    out["width"] = session->image.width;
    out["height"] = session->image.height;
    out["grid"] = grid_json(*session->grid);
    reply(res, 201, out);
  }));

  server_.Get(R"(/session/([0-9a-f]+))",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = find(req.matches[1]);
                std::lock_guard lock(s->mutex);
                Json out;
                out["id"] = s->id;
                out["revision"] = s->revision;
                out["width"] = s->image.width;
                out["height"] = s->image.height;
                out["grid"] = grid_json(*s->grid);
                out["has_energy"] = s->energy.has_value();
                reply(res, 200, out);
              }));

  server_.Delete(R"(/session/([0-9a-f]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   std::lock_guard lock(store_mutex_);
                   if (sessions_.erase(req.matches[1]) == 0) {
                     throw HttpError(404, fmt::format("unknown session '{}'",
                                                      req.matches[1].str()));
                   }
                   reply(res, 200, Json{{"ok", true}});
                 }));

  server_.Post(R"(/session/([0-9a-f]+)/deform)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = parse_body(req);
                 auto s = find(req.matches[1]);
                 std::lock_guard lock(s->mutex);
                 check_revision(body, s->revision);
                 const OptimizerConfig config = optimizer_from_json(body, options_.optimizer);
                 OptimizationTrace trace = deform(*s->grid, s->features, config);
                 s->grid = std::move(trace.final_grid);
                 ++s->revision;
                 Json tail = Json::array();
                 const std::size_t n = trace.records.size();
                 const std::size_t from = n > options_.trace_tail ? n - options_.trace_tail : 0;
                 for (std::size_t i = from; i < n; ++i) tail.push_back(record_json(trace.records[i]));
                 Json out;
                 out["revision"] = s->revision;
                 out["grid"] = grid_json(*s->grid);
                 out["trace_tail"] = std::move(tail);
                 reply(res, 200, out);
               }));

  server_.Post(R"(/session/([0-9a-f]+)/energy)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = parse_body(req);
                 auto s = find(req.matches[1]);
                 std::lock_guard lock(s->mutex);
                 check_revision(body, s->revision);
                 const std::size_t w = s->image.width;
                 const std::size_t h = s->image.height;
                 std::string source;
                 if (body.contains("mask")) {
                   const Image mask = decode_image(base64_decode(body["mask"].get<std::string>()));
                   if (mask.width != w || mask.height != h) {
                     throw DimensionMismatch(fmt::format("mask {}x{} does not match image {}x{}",
                                                         mask.width, mask.height, w, h));
                   }
                   s->energy = distance_transform(image_to_mask(mask), w, h);
                   s->scribbles.clear();
                   source = "mask";
                 } else if (body.contains("scribbles")) {
                   std::vector<std::vector<Vec2>> strokes;
                   for (const auto& stroke : body["scribbles"]) strokes.push_back(points(stroke, "scribbles"));
                   if (!body.value("append", false)) s->scribbles.clear();
                   s->scribbles.insert(s->scribbles.end(), strokes.begin(), strokes.end());
                   s->energy = distance_transform_from_sources(rasterize_strokes(s->scribbles, w, h), w, h);
                   source = "scribbles";
                 } else {
                   throw HttpError(422, "energy needs 'mask' or 'scribbles'");
                 }
                 ++s->revision;
                 Json out;
                 out["ok"] = true;
                 out["revision"] = s->revision;
                 out["source"] = source;
                 reply(res, 200, out);
               }));

  server_.Post(R"(/session/([0-9a-f]+)/trace)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = parse_body(req);
                 auto s = find(req.matches[1]);
                 std::lock_guard lock(s->mutex);
                 check_revision(body, s->revision);
                 if (!s->energy) throw HttpError(422, "no energy source; upload a mask or scribbles first");
                 if (!body.contains("seeds")) throw HttpError(422, "missing field 'seeds'");
                 const auto seeds = points(body["seeds"], "seeds");
                 const auto snap_k = body.value("snap_k", kDefaultSnapK);
                 TraceOutput traced = trace_on_grid(*s->grid, *s->energy, seeds, snap_k);
                 s->polygon = traced.polygon;
                 ++s->revision;
                 Json out = Json::parse(traced.polygon_json);
                 Json reply_body;
                 reply_body["revision"] = s->revision;
                 reply_body["polygon"] = out["vertices"];
                 reply_body["vertex_indices"] = out["vertex_indices"];
                 reply_body["energy"] = out["energy"];
                 reply_body["segment_energies"] = traced.polygon.segment_energies();
                 reply_body["snapped"] = traced.snapped;
                 reply(res, 200, reply_body);
               }));

  server_.Post(R"(/session/([0-9a-f]+)/vertex)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = parse_body(req);
                 auto s = find(req.matches[1]);
                 std::lock_guard lock(s->mutex);
                 check_revision(body, s->revision);
                 DeformedGrid& grid = *s->grid;
                 const auto index = body.at("index").get<std::size_t>();
                 if (index >= grid.vertex_count()) {
                   throw HttpError(422, fmt::format("vertex {} out of range", index));
                 }
                 const Vec2 target{body.at("x").get<double>(), body.at("y").get<double>()};
                 const double reach = std::max(grid.width(), grid.height());
                 DeformedGrid candidate = grid;
                 candidate.set_offset(index, grid.constrain_offset(
                                                 index, target - grid.base_position(index), reach));
                 const auto folded = cells_at_or_below(candidate, kAreaFloor);
                 const bool flipped = !folded.empty();
                 if (!flipped) {
                   grid = std::move(candidate);
                   ++s->revision;
                 }
                 Json out;
                 out["revision"] = s->revision;
                 out["flipped"] = flipped;
                 out["cells"] = folded;
                 out["grid"] = grid_json(grid);
                 reply(res, 200, out);
               }));

  server_.Get(R"(/session/([0-9a-f]+)/export)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = find(req.matches[1]);
                std::lock_guard lock(s->mutex);
                const DeformedGrid& grid = *s->grid;
                const std::size_t w = s->image.width;
                const std::size_t h = s->image.height;
                Json polygons = Json::array();
                std::vector<std::uint8_t> mask(w * h, 0);
                if (s->polygon) {
                  // Vertex edits after tracing move the polygon with the grid.
                  PolygonRecord record{polygon_points(grid, s->polygon->vertices),
                                       s->polygon->vertices, s->polygon->energy};
                  polygons.push_back(Json::parse(polygon_to_json(record)));
                  mask = rasterize_polygon(record.vertices, w, h);
                }
                Json out;
                out["revision"] = s->revision;
                out["grid"] = grid_json(grid);
                out["polygons"] = std::move(polygons);
                out["mask"] = base64_encode(encode_png(mask_to_image(mask, w, h)));
                reply(res, 200, out);
              }));
}

}  // namespace defgrid::workbench
