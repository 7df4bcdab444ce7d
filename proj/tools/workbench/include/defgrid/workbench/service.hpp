#pragma once

#include "defgrid/workbench/pipeline.hpp"

#include <httplib.h>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace defgrid::workbench {

struct ServiceOptions {
  GridSpec grid;
  OptimizerConfig optimizer;
  /// Iteration records returned by /deform.
  std::size_t trace_tail = 50;
};

/// Interactive annotation backend. Each session owns an image, a grid, an
/// optional energy map and the last traced polygon; every mutation bumps
/// the session revision.
///
///   POST   /session               {image: base64, quads?, variant?}
///   GET    /session/{id}
///   POST   /session/{id}/deform   {iters?, weights?, ...}
///   POST   /session/{id}/energy   {mask: base64} | {scribbles: [[[x,y],...],...], append?}
///   POST   /session/{id}/trace    {seeds: [[x,y],...], snap_k?}
///   POST   /session/{id}/vertex   {index, x, y}
///   GET    /session/{id}/export
///   DELETE /session/{id}
///
/// Mutating requests may carry "revision"; a stale value yields 409.
/// Unknown sessions yield 404, invalid input or geometry 422.
class Service {
 public:
  explicit Service(ServiceOptions options = {});

  httplib::Server& server() { return server_; }
  /// Binds to an ephemeral port and returns it (-1 on failure).
  int bind_any(const std::string& host = "127.0.0.1");
  bool listen(const std::string& host, int port);
  /// Blocks serving on a port obtained from bind_any.
  bool serve();
  void stop() { server_.stop(); }

  std::size_t session_count() const;

 private:
  struct Session {
    std::mutex mutex;
    std::string id;
    Image image;
    FeatureMap features;
    std::optional<DeformedGrid> grid;
    std::optional<EnergyMap> energy;
    std::vector<std::vector<Vec2>> scribbles;
    std::optional<TracedPolygon> polygon;
    std::uint64_t revision = 0;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string new_id();
  void routes();

  ServiceOptions options_;
  httplib::Server server_;
  mutable std::mutex store_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace defgrid::workbench
