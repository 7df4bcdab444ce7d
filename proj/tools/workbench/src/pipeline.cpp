#include "defgrid/workbench/pipeline.hpp"

#include "defgrid/errors.hpp"
#include "defgrid/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <regex>

namespace defgrid::workbench {

bool is_user_error(const std::exception& error) {
  return dynamic_cast<const InvalidArgument*>(&error) ||
         dynamic_cast<const DimensionMismatch*>(&error) ||
         dynamic_cast<const DegenerateCell*>(&error) || dynamic_cast<const InvalidGrid*>(&error) ||
         dynamic_cast<const FlippedCells*>(&error) || dynamic_cast<const NoBoundary*>(&error) ||
         dynamic_cast<const DegenerateSeeds*>(&error);
}

void check_image_limits(const Image& image) {
  if (image.width == 0 || image.height == 0) throw InvalidArgument("image is empty");
  if (image.width > kMaxImageSide || image.height > kMaxImageSide) {
    throw InvalidArgument(fmt::format("image {}x{} exceeds the {}x{} limit", image.width,
                                      image.height, kMaxImageSide, kMaxImageSide));
  }
}

GridSpec parse_quads(const std::string& text) {
  static const std::regex pattern(R"(^\s*(\d+)\s*[xX]\s*(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw InvalidArgument(fmt::format("quads must look like RxC, got '{}'", text));
  }
  GridSpec spec;
  spec.rows = std::stoul(m[1]);
  spec.cols = std::stoul(m[2]);
  if (spec.rows == 0 || spec.cols == 0) throw InvalidArgument("quad counts must be positive");
  return spec;
}

OptimizationTrace fit_grid(const FeatureMap& features, const GridSpec& spec,
                           const OptimizerConfig& config) {
  const DeformedGrid grid =
      build_uniform_grid(spec.rows, spec.cols, static_cast<double>(features.width()),
                         static_cast<double>(features.height()), spec.variant);
  if (grid.pitch() < 1.0) {
    throw InvalidArgument(fmt::format("{}x{} quads leave less than one pixel per quad", spec.rows,
                                      spec.cols));
  }
  return deform(grid, features, config);
}

PartitionOutput run_partition(const Image& image, const PartitionRequest& request,
                              const std::optional<Image>& ground_truth,
                              const std::string& image_name) {
  check_image_limits(image);
  const FeatureMap features = image_to_features(image);
  PartitionOutput out{fit_grid(features, request.grid, request.optimizer), {}, {}, {}, {}, false};
  const DeformedGrid& grid = out.trace.final_grid;

  const auto assign = soft_assign(grid, image.width, image.height,
                                  request.optimizer.weights.assignment());
  const auto stats = cell_stats(assign, features);
  AgglomerateOptions options;
  options.target = request.superpixels;
  options.threshold = request.threshold;
  options.averaging = request.averaging;
  out.partition = agglomerate(grid, build_affinity(grid, stats, request.sigma), options,
                              image.width, image.height);
  out.target_exceeded = out.partition.target_exceeded;

  out.grid_json = grid_to_json(grid);
  const auto& seg = out.partition.segmentation;
  out.labels_pgm = encode_pgm(labels_to_image(seg.ids, seg.width, seg.height, 65535));

  if (ground_truth) {
    if (ground_truth->width != image.width || ground_truth->height != image.height) {
      throw DimensionMismatch(fmt::format("ground truth {}x{} does not match image {}x{}",
                                          ground_truth->width, ground_truth->height, image.width,
                                          image.height));
    }
    const SegmentationMap gt{image.width, image.height, image_to_labels(*ground_truth)};
    const auto boundary = metric_boundary(seg, gt, kBoundaryTolerance);
    out.metrics = MetricsRow{image_name, out.partition.cluster_count, metric_asa(seg, gt),
                             boundary.precision, boundary.recall, boundary.f};
  }
  return out;
}

Image boundary_overlay(const Image& image, const SegmentationMap& segmentation) {
  Image out{image.width, image.height, 3, 255, {}};
  out.samples.resize(image.width * image.height * 3);
  const double scale = 255.0 / static_cast<double>(image.max_value);
  const auto edges = boundary_map(segmentation);
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = image.channels == 3 ? c : 0;
      out.samples[i * 3 + c] = static_cast<std::uint16_t>(
          std::lround(static_cast<double>(image.samples[i * image.channels + src]) * scale));
    }
    if (edges[i]) {
      out.samples[i * 3] = 255;
      out.samples[i * 3 + 1] = 0;
      out.samples[i * 3 + 2] = 0;
    }
  }
  return out;
}

EnergyMap image_edge_energy(const FeatureMap& features, double threshold) {
  const std::size_t w = features.width();
  const std::size_t h = features.height();
  std::vector<std::uint8_t> sources(w * h, 0);
  const auto differs = [&](std::size_t a, std::size_t b) {
    const auto pa = features.pixel(a);
    const auto pb = features.pixel(b);
    for (std::size_t c = 0; c < features.channels(); ++c) {
      if (std::abs(pa[c] - pb[c]) > threshold) return true;
    }
    return false;
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (x + 1 < w && differs(i, i + 1)) sources[i] = sources[i + 1] = 1;
      if (y + 1 < h && differs(i, i + w)) sources[i] = sources[i + w] = 1;
    }
  }
  return distance_transform_from_sources(sources, w, h);
}

std::vector<std::uint8_t> rasterize_strokes(const std::vector<std::vector<Vec2>>& strokes,
                                            std::size_t width, std::size_t height) {
  std::vector<std::uint8_t> out(width * height, 0);
  const auto mark = [&](Vec2 p) {
    const double x = std::floor(p.x);
    const double y = std::floor(p.y);
    if (x < 0.0 || y < 0.0 || x >= static_cast<double>(width) || y >= static_cast<double>(height)) {
      return;
    }
    out[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] = 1;
  };
  for (const auto& stroke : strokes) {
    if (stroke.size() == 1) mark(stroke[0]);
    for (std::size_t j = 0; j + 1 < stroke.size(); ++j) {
      const Vec2 a = stroke[j];
      const Vec2 b = stroke[j + 1];
      const auto steps = static_cast<std::size_t>(std::ceil(2.0 * norm(b - a))) + 1;
      for (std::size_t s = 0; s <= steps; ++s) {
        mark(a + (static_cast<double>(s) / static_cast<double>(steps)) * (b - a));
      }
    }
  }
  return out;
}

TraceOutput trace_on_grid(const DeformedGrid& grid, const EnergyMap& energy,
                          const std::vector<Vec2>& seeds, std::size_t snap_k) {
  TraceOutput out;
  const auto vertex = vertex_energy(grid, energy);
  const auto edges = edge_energy(grid, energy);
  out.snapped = snap_seeds(grid, vertex, seeds, snap_k);
  out.polygon = trace_path(grid, edges, out.snapped);
  out.record = polygon_record(grid, out.polygon);
  out.polygon_json = polygon_to_json(out.record);
  out.mask_png =
      encode_png(mask_to_image(out.polygon.mask, out.polygon.width, out.polygon.height));
  return out;
}

PoolOutput run_pool(const DeformedGrid& grid, const FeatureMap& features, PoolMode mode) {
  PoolOutput out;
  out.cells = grid_pool(grid, features, mode);
  out.cells_bin = cell_features_to_bytes(out.cells);
  out.reconstruction =
      features_to_image(paste_back(grid, out.cells, features.width(), features.height()));
  out.reconstruction_png = encode_png(out.reconstruction);
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw DimensionMismatch("images differ in shape");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.samples.size());
  const double peak = static_cast<double>(a.max_value);
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace defgrid::workbench
