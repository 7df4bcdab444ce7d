#include "defgrid/serialize.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <bit>
#include <limits>
#include <cstring>

namespace defgrid {

using Json = nlohmann::ordered_json;

namespace {

Json point_array(std::span<const Vec2> points) {
  Json out = Json::array();
  for (const Vec2& p : points) out.push_back(Json::array({p.x, p.y}));
  return out;
}

std::vector<Vec2> parse_points(const Json& j, std::string_view what) {
  if (!j.is_array()) throw InvalidArgument(fmt::format("'{}' must be an array", what));
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw InvalidArgument(fmt::format("'{}' entries must be [x, y] pairs", what));
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

Json parse(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InvalidArgument(fmt::format("malformed JSON: {}", e.what()));
  }
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidArgument(fmt::format("missing field '{}'", key));
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw InvalidArgument(fmt::format("field '{}' has the wrong type", key));
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
  return v;
}

}  // namespace

std::string grid_to_json(const DeformedGrid& grid) {
  const GridTopology& topo = grid.topology();
  Json j;
  j["rows"] = topo.rows();
  j["cols"] = topo.cols();
  j["width"] = grid.width();
  j["height"] = grid.height();
  j["variant"] = std::string(to_string(topo.variant()));
  j["vertices"] = point_array(grid.positions());
  Json cells = Json::array();
  for (const auto& c : topo.cells()) cells.push_back(Json::array({c[0], c[1], c[2]}));
  j["cells"] = std::move(cells);
  return j.dump() + "\n";
}

DeformedGrid grid_from_json(std::string_view text) {
  const Json j = parse(text);
  const auto rows = field<std::size_t>(j, "rows");
  const auto cols = field<std::size_t>(j, "cols");
  const auto width = field<double>(j, "width");
  const auto height = field<double>(j, "height");
  const auto variant = parse_topology_variant(field<std::string>(j, "variant"));
  DeformedGrid grid = build_uniform_grid(rows, cols, width, height, variant);
  const auto vertices = parse_points(j.at("vertices"), "vertices");
  if (vertices.size() != grid.vertex_count()) {
    throw InvalidArgument(fmt::format("expected {} vertices, got {}", grid.vertex_count(),
                                      vertices.size()));
  }
  if (j.contains("cells")) {
    const auto cells = field<std::vector<std::array<std::size_t, 3>>>(j, "cells");
    const auto expect = grid.topology().cells();
    if (!std::equal(cells.begin(), cells.end(), expect.begin(), expect.end())) {
      throw InvalidArgument("cells do not match the declared topology");
    }
  }
  grid.set_positions(vertices);
  return grid;
}

PolygonRecord polygon_record(const DeformedGrid& grid, const TracedPolygon& polygon) {
  return {polygon_points(grid, polygon.vertices), polygon.vertices, polygon.energy};
}

std::string polygon_to_json(const PolygonRecord& polygon) {
  Json j;
  j["vertices"] = point_array(polygon.vertices);
  j["vertex_indices"] = polygon.vertex_indices;
  j["energy"] = polygon.energy;
  return j.dump() + "\n";
}

PolygonRecord polygon_from_json(std::string_view text) {
  const Json j = parse(text);
  PolygonRecord p;
  p.vertices = parse_points(j.at("vertices"), "vertices");
  p.vertex_indices = field<std::vector<std::size_t>>(j, "vertex_indices");
  p.energy = field<double>(j, "energy");
  return p;
}

std::string iteration_to_json(const IterationRecord& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["l_var"] = r.l_var;
  j["l_recons"] = r.l_recons;
  j["l_area"] = r.l_area;
  j["l_lap"] = r.l_lap;
  j["l_total"] = r.l_total;
  j["max_displacement"] = r.max_displacement;
  j["step"] = r.step;
  j["accepted"] = r.accepted;
  j["backtracks"] = r.backtracks;
  return j.dump();
}

std::string trace_to_jsonl(std::span<const IterationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += iteration_to_json(r);
    out += '\n';
  }
  return out;
}

std::vector<Vec2> seeds_from_json(std::string_view text) {
  const Json j = parse(text);
  if (j.is_object()) {
    if (!j.contains("seeds")) throw InvalidArgument("missing field 'seeds'");
    return parse_points(j.at("seeds"), "seeds");
  }
  return parse_points(j, "seeds");
}

std::vector<std::uint8_t> cell_features_to_bytes(const CellFeatureGrid& cells) {
  static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
  std::vector<std::uint8_t> out;
  out.reserve(12 + cells.values.size() * 4);
  put_u32(out, static_cast<std::uint32_t>(cells.cell_count()));
  put_u32(out, static_cast<std::uint32_t>(cells.channels));
  put_u32(out, cells.mode == PoolMode::kMean ? 0u : 1u);
  for (const double v : cells.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

CellFeatureBlob cell_features_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw InvalidArgument("cell feature file is truncated");
  CellFeatureBlob blob;
  blob.cell_count = get_u32(bytes, 0);
  blob.channels = get_u32(bytes, 4);
  const std::uint32_t tag = get_u32(bytes, 8);
  if (tag > 1) throw InvalidArgument(fmt::format("unknown pool mode tag {}", tag));
  blob.mode = tag == 0 ? PoolMode::kMean : PoolMode::kMax;
  const std::size_t n = static_cast<std::size_t>(blob.cell_count) * blob.channels;
  if (bytes.size() != 12 + 4 * n) throw InvalidArgument("cell feature file size mismatch");
  blob.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) blob.values[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
  return blob;
}

std::string metrics_to_csv(std::span<const MetricsRow> rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.image, r.superpixels, r.asa, r.bp,
                       r.br, r.f);
  }
  return out;
}

}  // namespace defgrid
