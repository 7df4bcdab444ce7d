#pragma once

#include "defgrid/energy.hpp"
#include "defgrid/geometry.hpp"
#include "defgrid/grid.hpp"
#include "defgrid/optimizer.hpp"
#include "defgrid/pooling.hpp"
#include "defgrid/tracer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace defgrid {

/// {"rows","cols","width","height","variant","vertices":[[x,y],...],"cells":[[a,b,c],...]}
/// on one line, followed by a newline.
std::string grid_to_json(const DeformedGrid& grid);
/// Rebuilds the topology and stores the vertex positions verbatim. Throws
/// InvalidArgument on malformed input or cells that disagree with the topology.
DeformedGrid grid_from_json(std::string_view text);

struct PolygonRecord {
  std::vector<Vec2> vertices;
  std::vector<std::size_t> vertex_indices;
  double energy = 0.0;
};

PolygonRecord polygon_record(const DeformedGrid& grid, const TracedPolygon& polygon);
/// {"vertices":[[x,y],...],"vertex_indices":[...],"energy":e} plus newline.
std::string polygon_to_json(const PolygonRecord& polygon);
PolygonRecord polygon_from_json(std::string_view text);

/// One JSON object per line; the fields of IterationRecord.
std::string iteration_to_json(const IterationRecord& record);
std::string trace_to_jsonl(std::span<const IterationRecord> records);

/// Seeds as [[x,y],...] or {"seeds":[[x,y],...]}.
std::vector<Vec2> seeds_from_json(std::string_view text);

/// Little-endian u32 K, u32 d, u32 mode (0 mean, 1 max), then K*d float32.
std::vector<std::uint8_t> cell_features_to_bytes(const CellFeatureGrid& cells);

struct CellFeatureBlob {
  std::uint32_t cell_count = 0;
  std::uint32_t channels = 0;
  PoolMode mode = PoolMode::kMean;
  std::vector<float> values;
};
CellFeatureBlob cell_features_from_bytes(std::span<const std::uint8_t> bytes);

struct MetricsRow {
  std::string image;
  std::size_t superpixels = 0;
  double asa = 0.0;
  double bp = 0.0;
  double br = 0.0;
  double f = 0.0;
};

inline constexpr std::string_view kMetricsHeader = "image,n,asa,bp,br,f";
/// Header line followed by one line per row, six decimals.
std::string metrics_to_csv(std::span<const MetricsRow> rows);

}  // namespace defgrid
