#pragma once

#include "defgrid/grid.hpp"
#include "defgrid/image_io.hpp"
#include "defgrid/optimizer.hpp"
#include "defgrid/partition.hpp"
#include "defgrid/pooling.hpp"
#include "defgrid/serialize.hpp"
#include "defgrid/tracer.hpp"

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

namespace defgrid::workbench {

inline constexpr std::size_t kMaxImageSide = 2048;
inline constexpr std::size_t kDefaultSnapK = 6;
inline constexpr std::size_t kBoundaryTolerance = 3;

/// True for errors caused by the request or input files rather than a defect.
bool is_user_error(const std::exception& error);

/// Rejects images larger than kMaxImageSide on either side.
void check_image_limits(const Image& image);

struct GridSpec {
  std::size_t rows = 20;
  std::size_t cols = 20;
  TopologyVariant variant = TopologyVariant::kAlternatingDiagonal;
};

/// Parses "RxC" (e.g. "20x20").
GridSpec parse_quads(const std::string& text);

/// Uniform grid over the image, deformed when config.iterations > 0.
OptimizationTrace fit_grid(const FeatureMap& features, const GridSpec& spec,
                           const OptimizerConfig& config);

struct PartitionRequest {
  GridSpec grid;
  OptimizerConfig optimizer;
  std::size_t superpixels = 36;
  std::optional<double> threshold;
  AffinityAveraging averaging = AffinityAveraging::kArithmetic;
  double sigma = kDefaultAffinitySigma;
};

struct PartitionOutput {
  OptimizationTrace trace;
  PartitionResult partition;
  std::string grid_json;
  std::vector<std::uint8_t> labels_pgm;  // 16-bit
  std::optional<MetricsRow> metrics;
  bool target_exceeded = false;
};

PartitionOutput run_partition(const Image& image, const PartitionRequest& request,
                              const std::optional<Image>& ground_truth = std::nullopt,
                              const std::string& image_name = "image");

/// Image with segment boundaries painted red.
Image boundary_overlay(const Image& image, const SegmentationMap& segmentation);

/// Distance map from pixels whose colour differs from a 4-neighbour by more
/// than `threshold` in some channel. Used when no mask or scribbles exist.
EnergyMap image_edge_energy(const FeatureMap& features, double threshold);

/// Scribble strokes (polylines in pixel coordinates) burned into a source map.
std::vector<std::uint8_t> rasterize_strokes(const std::vector<std::vector<Vec2>>& strokes,
                                            std::size_t width, std::size_t height);

struct TraceOutput {
  TracedPolygon polygon;
  PolygonRecord record;
  std::string polygon_json;
  std::vector<std::uint8_t> mask_png;
  std::vector<std::size_t> snapped;
};

/// Snap + trace on a fixed grid.
TraceOutput trace_on_grid(const DeformedGrid& grid, const EnergyMap& energy,
                          const std::vector<Vec2>& seeds, std::size_t snap_k);

struct PoolOutput {
  CellFeatureGrid cells;
  std::vector<std::uint8_t> cells_bin;
  Image reconstruction;
  std::vector<std::uint8_t> reconstruction_png;
};

PoolOutput run_pool(const DeformedGrid& grid, const FeatureMap& features, PoolMode mode);

/// Peak signal-to-noise ratio in dB of two equally sized 8-bit images.
double psnr(const Image& a, const Image& b);

}  // namespace defgrid::workbench
