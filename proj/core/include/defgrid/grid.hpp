#pragma once

#include "defgrid/geometry.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace defgrid {

/// How each lattice quad is split into triangles.
enum class TopologyVariant {
  /// Two triangles per quad; the diagonal alternates in a checkerboard.
  kAlternatingDiagonal,
  /// Four triangles per quad fanned around an extra center vertex.
  kCenterFan,
};

std::string_view to_string(TopologyVariant variant);
TopologyVariant parse_topology_variant(std::string_view name);

using CellIndices = std::array<std::size_t, 3>;

/// Undirected grid edge, a < b.
struct GridEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const GridEdge&, const GridEdge&) = default;
};

/// Immutable triangular topology over a rows x cols lattice of quads.
///
/// Lattice vertex (r, c) has index r * (cols + 1) + c. The center-fan variant
/// appends one center vertex per quad after the lattice vertices. Cells are
/// ordered row-major by quad, then by triangle within the quad; every cell
/// winds so that its shoelace area is positive in image coordinates.
class GridTopology {
 public:
  GridTopology(std::size_t rows, std::size_t cols, TopologyVariant variant);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  TopologyVariant variant() const { return variant_; }
  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t lattice_vertex_count() const { return (rows_ + 1) * (cols_ + 1); }
  std::size_t triangles_per_quad() const { return tris_per_quad_; }
  std::size_t cell_count() const { return cells_.size(); }

  std::size_t lattice_index(std::size_t r, std::size_t c) const { return r * (cols_ + 1) + c; }
  std::size_t quad_of_cell(std::size_t cell) const { return cell / tris_per_quad_; }
  std::size_t first_cell_of_quad(std::size_t quad) const { return quad * tris_per_quad_; }

  std::span<const CellIndices> cells() const { return cells_; }
  const CellIndices& cell(std::size_t k) const { return cells_[k]; }

  /// N(i): vertices sharing a cell edge with i, ascending.
  std::span<const std::size_t> neighbors(std::size_t vertex) const;

  /// Unique edges, sorted by (a, b).
  std::span<const GridEdge> edges() const { return edges_; }
  /// Index into edges() of the edge {u, v}; npos when absent.
  std::size_t edge_index(std::size_t u, std::size_t v) const;
  /// Cells incident to an edge (one on the border, two inside).
  std::span<const std::size_t> edge_cells(std::size_t edge) const;

  /// Pairs (j, k), j < k, of cells sharing an edge.
  std::span<const std::pair<std::size_t, std::size_t>> cell_adjacency() const {
    return cell_adjacency_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t rows_;
  std::size_t cols_;
  TopologyVariant variant_;
  std::size_t tris_per_quad_;
  std::size_t vertex_count_;
  std::vector<CellIndices> cells_;
  std::vector<std::size_t> neighbor_offsets_;
  std::vector<std::size_t> neighbor_list_;
  std::vector<GridEdge> edges_;
  std::vector<std::size_t> edge_cell_offsets_;
  std::vector<std::size_t> edge_cell_list_;
  std::vector<std::pair<std::size_t, std::size_t>> cell_adjacency_;
};

/// Which offset components a vertex may change.
enum class VertexMotion {
  kFree,
  kSlideX,  // top/bottom border: y frozen
  kSlideY,  // left/right border: x frozen
  kFixed,   // image corner
};

/// Topology plus movable vertex positions (base lattice + offsets).
class DeformedGrid {
 public:
  DeformedGrid(std::shared_ptr<const GridTopology> topology, double width, double height);

  const GridTopology& topology() const { return *topology_; }
  const std::shared_ptr<const GridTopology>& topology_ptr() const { return topology_; }
  double width() const { return width_; }
  double height() const { return height_; }
  std::size_t vertex_count() const { return base_.size(); }
  std::size_t cell_count() const { return topology_->cell_count(); }

  /// Quad extent in pixels.
  double quad_width() const { return width_ / static_cast<double>(topology_->cols()); }
  double quad_height() const { return height_ / static_cast<double>(topology_->rows()); }
  /// min(quad_width, quad_height).
  double pitch() const;

  Vec2 base_position(std::size_t i) const { return base_[i]; }
  Vec2 offset(std::size_t i) const { return offsets_[i]; }
  Vec2 position(std::size_t i) const { return positions_[i]; }
  std::span<const Vec2> base_positions() const { return base_; }
  std::span<const Vec2> offsets() const { return offsets_; }
  std::span<const Vec2> positions() const { return positions_; }
  VertexMotion motion(std::size_t i) const { return motion_[i]; }

  Triangle triangle(std::size_t cell) const;

  /// Replaces offsets verbatim. No clamping or validity check.
  void set_offsets(std::span<const Vec2> offsets);
  void set_offset(std::size_t i, Vec2 offset);
  /// Stores positions verbatim (offsets become position - base).
  void set_positions(std::span<const Vec2> positions);

  /// Zeroes frozen components and clamps each component to +-max_abs.
  Vec2 constrain_offset(std::size_t i, Vec2 offset, double max_abs) const;

  /// Quad (row-major index) of the base lattice containing a point.
  std::size_t lattice_quad(Vec2 point) const;

 private:
  std::shared_ptr<const GridTopology> topology_;
  double width_;
  double height_;
  std::vector<Vec2> base_;
  std::vector<Vec2> offsets_;
  std::vector<Vec2> positions_;
  std::vector<VertexMotion> motion_;
};

/// Uniform lattice with zero offsets. Throws InvalidArgument on empty extents.
DeformedGrid build_uniform_grid(std::size_t rows, std::size_t cols, double width, double height,
                                TopologyVariant variant = TopologyVariant::kAlternatingDiagonal);

std::vector<double> signed_areas(const DeformedGrid& grid);

/// Smallest signed cell area.
double min_signed_area(const DeformedGrid& grid);

/// Cells whose signed area is <= floor, ascending.
std::vector<std::size_t> cells_at_or_below(const DeformedGrid& grid, double floor);

/// Cell containing the point; ties on shared edges go to the lowest index.
/// Points in no cell (outside the image) go to the cell with the largest
/// minimum barycentric weight.
std::size_t locate_cell(const DeformedGrid& grid, Vec2 point);

/// Containing cell of every pixel center (x + 0.5, y + 0.5), row-major.
std::vector<std::size_t> rasterize_cells(const DeformedGrid& grid, std::size_t width,
                                         std::size_t height);

/// Cells belonging to quads within `radius` quads (Chebyshev) of `quad`.
/// A negative radius selects all cells.
std::vector<std::size_t> cells_near_quad(const GridTopology& topology, std::size_t quad,
                                         int radius);

}  // namespace defgrid
