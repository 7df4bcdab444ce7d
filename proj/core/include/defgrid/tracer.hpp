#pragma once

#include "defgrid/geometry.hpp"
#include "defgrid/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace defgrid {

/// Per-pixel distance (px) to the nearest boundary pixel.
struct EnergyMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

/// Foreground pixels with a 4-neighbor (inside the image) in the background.
std::vector<std::uint8_t> boundary_pixels(std::span<const std::uint8_t> mask, std::size_t width,
                                          std::size_t height);

/// Exact Euclidean distance from every pixel to the nearest nonzero source.
/// Throws NoBoundary when there are no sources.
EnergyMap distance_transform_from_sources(std::span<const std::uint8_t> sources,
                                          std::size_t width, std::size_t height);

/// Distance transform of a binary mask's boundary. Throws NoBoundary when
/// the mask is uniform.
EnergyMap distance_transform(std::span<const std::uint8_t> mask, std::size_t width,
                             std::size_t height);

/// Bilinear sample with pixel (x, y) centered at (x + 0.5, y + 0.5); points
/// are clamped to the rectangle spanned by pixel centers.
double sample_bilinear(const EnergyMap& map, Vec2 point);

std::vector<double> vertex_energy(const DeformedGrid& grid, const EnergyMap& map);

/// Mean of bilinear samples spaced at most 1 px along each grid edge,
/// endpoints included. Aligned with topology().edges().
std::vector<double> edge_energy(const DeformedGrid& grid, const EnergyMap& map);

/// For each seed, the minimal-energy vertex among its k nearest (ties: the
/// nearer, then the lower index). Repeated vertices keep first occurrence.
std::vector<std::size_t> snap_seeds(const DeformedGrid& grid,
                                    std::span<const double> vertex_energies,
                                    std::span<const Vec2> seeds, std::size_t k);

/// Minimal-energy path between two vertices over grid edges.
struct PathSegment {
  std::vector<std::size_t> vertices;  // from source to target inclusive
  double energy = 0.0;
};

PathSegment shortest_path(const GridTopology& topology, std::span<const double> edge_energies,
                          std::size_t source, std::size_t target);

struct TracedPolygon {
  /// Closed vertex path; the last vertex connects back to the first.
  std::vector<std::size_t> vertices;
  std::vector<PathSegment> segments;
  double energy = 0.0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> mask;

  std::vector<double> segment_energies() const;
};

/// Joins consecutive snapped vertices (cyclically) with minimal-energy paths.
/// Throws DegenerateSeeds for fewer than three distinct vertices.
TracedPolygon trace_path(const DeformedGrid& grid, std::span<const double> edge_energies,
                         std::span<const std::size_t> snapped);

std::vector<Vec2> polygon_points(const DeformedGrid& grid, std::span<const std::size_t> vertices);

/// Even-odd fill; a pixel is set when its center is inside.
std::vector<std::uint8_t> rasterize_polygon(std::span<const Vec2> polygon, std::size_t width,
                                            std::size_t height);

/// Outer contour (pixel centers, clockwise on screen) of the largest
/// 8-connected foreground component, starting at its first pixel in raster
/// order. Throws NoBoundary for an empty mask.
std::vector<Vec2> outer_contour(std::span<const std::uint8_t> mask, std::size_t width,
                                std::size_t height);

inline constexpr std::size_t kDefaultSeedCount = 40;

/// `count` points at equal arc-length spacing along outer_contour.
std::vector<Vec2> sample_seed_points(std::span<const std::uint8_t> mask, std::size_t width,
                                     std::size_t height, std::size_t count = kDefaultSeedCount);

}  // namespace defgrid
