#include "defgrid/grid.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace defgrid {

std::string_view to_string(TopologyVariant variant) {
  switch (variant) {
    case TopologyVariant::kAlternatingDiagonal:
      return "alternating";
    case TopologyVariant::kCenterFan:
      return "center-fan";
  }
  return "alternating";
}

TopologyVariant parse_topology_variant(std::string_view name) {
  if (name == "alternating") return TopologyVariant::kAlternatingDiagonal;
  if (name == "center-fan") return TopologyVariant::kCenterFan;
  throw InvalidArgument(fmt::format("unknown topology variant '{}'", name));
}

GridTopology::GridTopology(std::size_t rows, std::size_t cols, TopologyVariant variant)
    : rows_(rows), cols_(cols), variant_(variant) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("grid needs at least one quad row and column");
  }
  tris_per_quad_ = variant == TopologyVariant::kCenterFan ? 4 : 2;
  vertex_count_ = lattice_vertex_count() +
                  (variant == TopologyVariant::kCenterFan ? rows * cols : 0);

  cells_.reserve(rows * cols * tris_per_quad_);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t tl = lattice_index(r, c);
      const std::size_t tr = lattice_index(r, c + 1);
      const std::size_t bl = lattice_index(r + 1, c);
      const std::size_t br = lattice_index(r + 1, c + 1);
      if (variant == TopologyVariant::kCenterFan) {
        const std::size_t m = lattice_vertex_count() + r * cols + c;
        cells_.push_back({tl, tr, m});
        cells_.push_back({tr, br, m});
        cells_.push_back({br, bl, m});
        cells_.push_back({bl, tl, m});
      } else if ((r + c) % 2 == 0) {
        cells_.push_back({tl, tr, br});
        cells_.push_back({tl, br, bl});
      } else {
        cells_.push_back({tl, tr, bl});
        cells_.push_back({tr, br, bl});
      }
    }
  }

  // Edges and their incident cells.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_map;
  std::vector<std::set<std::size_t>> nbrs(vertex_count_);
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const auto& t = cells_[k];
    for (int e = 0; e < 3; ++e) {
      const std::size_t u = t[e];
      const std::size_t v = t[(e + 1) % 3];
      edge_map[{std::min(u, v), std::max(u, v)}].push_back(k);
      nbrs[u].insert(v);
      nbrs[v].insert(u);
    }
  }
  edges_.reserve(edge_map.size());
  edge_cell_offsets_.push_back(0);
  for (const auto& [key, incident] : edge_map) {
    edges_.push_back({key.first, key.second});
    edge_cell_list_.insert(edge_cell_list_.end(), incident.begin(), incident.end());
    edge_cell_offsets_.push_back(edge_cell_list_.size());
    if (incident.size() == 2) {
      cell_adjacency_.emplace_back(std::min(incident[0], incident[1]),
                                   std::max(incident[0], incident[1]));
    }
  }
  std::sort(cell_adjacency_.begin(), cell_adjacency_.end());

  neighbor_offsets_.push_back(0);
  for (const auto& s : nbrs) {
    neighbor_list_.insert(neighbor_list_.end(), s.begin(), s.end());
    neighbor_offsets_.push_back(neighbor_list_.size());
  }
}

std::span<const std::size_t> GridTopology::neighbors(std::size_t vertex) const {
  return std::span<const std::size_t>(neighbor_list_)
      .subspan(neighbor_offsets_[vertex], neighbor_offsets_[vertex + 1] - neighbor_offsets_[vertex]);
}

std::size_t GridTopology::edge_index(std::size_t u, std::size_t v) const {
  const GridEdge key{std::min(u, v), std::max(u, v)};
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key,
                                   [](const GridEdge& x, const GridEdge& y) {
                                     return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                                   });
  if (it == edges_.end() || !(*it == key)) return npos;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::span<const std::size_t> GridTopology::edge_cells(std::size_t edge) const {
  return std::span<const std::size_t>(edge_cell_list_)
      .subspan(edge_cell_offsets_[edge], edge_cell_offsets_[edge + 1] - edge_cell_offsets_[edge]);
}

DeformedGrid::DeformedGrid(std::shared_ptr<const GridTopology> topology, double width,
                           double height)
    : topology_(std::move(topology)), width_(width), height_(height) {
  if (!topology_) throw InvalidArgument("null topology");
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("image extent must be positive");
  }
  const auto& topo = *topology_;
  const std::size_t rows = topo.rows();
  const std::size_t cols = topo.cols();
  base_.resize(topo.vertex_count());
  motion_.resize(topo.vertex_count(), VertexMotion::kFree);
  for (std::size_t r = 0; r <= rows; ++r) {
    for (std::size_t c = 0; c <= cols; ++c) {
      const std::size_t i = topo.lattice_index(r, c);
      base_[i] = {static_cast<double>(c) * width / static_cast<double>(cols),
                  static_cast<double>(r) * height / static_cast<double>(rows)};
      const bool on_x_border = c == 0 || c == cols;
      const bool on_y_border = r == 0 || r == rows;
      if (on_x_border && on_y_border) {
        motion_[i] = VertexMotion::kFixed;
      } else if (on_x_border) {
        motion_[i] = VertexMotion::kSlideY;
      } else if (on_y_border) {
        motion_[i] = VertexMotion::kSlideX;
      }
    }
  }
  if (topo.variant() == TopologyVariant::kCenterFan) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        base_[topo.lattice_vertex_count() + r * cols + c] = {
            (static_cast<double>(c) + 0.5) * width / static_cast<double>(cols),
            (static_cast<double>(r) + 0.5) * height / static_cast<double>(rows)};
      }
    }
  }
  offsets_.assign(base_.size(), Vec2{});
  positions_ = base_;
}

double DeformedGrid::pitch() const { return std::min(quad_width(), quad_height()); }

Triangle DeformedGrid::triangle(std::size_t cell) const {
  const auto& t = topology_->cell(cell);
  return {positions_[t[0]], positions_[t[1]], positions_[t[2]]};
}

void DeformedGrid::set_offsets(std::span<const Vec2> offsets) {
  if (offsets.size() != offsets_.size()) {
    throw DimensionMismatch(
        fmt::format("expected {} offsets, got {}", offsets_.size(), offsets.size()));
  }
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    offsets_[i] = offsets[i];
    positions_[i] = base_[i] + offsets[i];
  }
}

void DeformedGrid::set_offset(std::size_t i, Vec2 offset) {
  offsets_.at(i) = offset;
  positions_[i] = base_[i] + offset;
}

void DeformedGrid::set_positions(std::span<const Vec2> positions) {
  if (positions.size() != positions_.size()) {
    throw DimensionMismatch(
        fmt::format("expected {} positions, got {}", positions_.size(), positions.size()));
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions_[i] = positions[i];
    offsets_[i] = positions[i] - base_[i];
  }
}

Vec2 DeformedGrid::constrain_offset(std::size_t i, Vec2 offset, double max_abs) const {
  Vec2 out{std::clamp(offset.x, -max_abs, max_abs), std::clamp(offset.y, -max_abs, max_abs)};
  switch (motion_[i]) {
    case VertexMotion::kFree:
      break;
    case VertexMotion::kSlideX:
      out.y = 0.0;
      break;
    case VertexMotion::kSlideY:
      out.x = 0.0;
      break;
    case VertexMotion::kFixed:
      out = {};
      break;
  }
  // Keep the vertex inside the image rectangle.
  out.x = std::clamp(base_[i].x + out.x, 0.0, width_) - base_[i].x;
  out.y = std::clamp(base_[i].y + out.y, 0.0, height_) - base_[i].y;
  return out;
}

std::size_t DeformedGrid::lattice_quad(Vec2 point) const {
  const auto clamp_index = [](double v, std::size_t n) {
    if (!(v >= 0.0)) return std::size_t{0};
    const auto idx = static_cast<std::size_t>(std::floor(v));
    return std::min(idx, n - 1);
  };
  const std::size_t c = clamp_index(point.x / quad_width(), topology_->cols());
  const std::size_t r = clamp_index(point.y / quad_height(), topology_->rows());
  return r * topology_->cols() + c;
}

DeformedGrid build_uniform_grid(std::size_t rows, std::size_t cols, double width, double height,
                                TopologyVariant variant) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("grid needs at least one quad row and column");
  }
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("image extent must be positive");
  }
  return DeformedGrid(std::make_shared<const GridTopology>(rows, cols, variant), width, height);
}

std::vector<double> signed_areas(const DeformedGrid& grid) {
  std::vector<double> out(grid.cell_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = signed_area(grid.triangle(k));
  return out;
}

double min_signed_area(const DeformedGrid& grid) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    m = std::min(m, signed_area(grid.triangle(k)));
  }
  return m;
}

std::vector<std::size_t> cells_at_or_below(const DeformedGrid& grid, double floor) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    if (signed_area(grid.triangle(k)) <= floor) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> cells_near_quad(const GridTopology& topology, std::size_t quad,
                                         int radius) {
  std::vector<std::size_t> out;
  const std::size_t tpq = topology.triangles_per_quad();
  if (radius < 0) {
    out.resize(topology.cell_count());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = k;
    return out;
  }
  const auto rows = static_cast<long>(topology.rows());
  const auto cols = static_cast<long>(topology.cols());
  const long qr = static_cast<long>(quad) / cols;
  const long qc = static_cast<long>(quad) % cols;
  for (long r = std::max(0L, qr - radius); r <= std::min(rows - 1, qr + radius); ++r) {
    for (long c = std::max(0L, qc - radius); c <= std::min(cols - 1, qc + radius); ++c) {
      const std::size_t first = topology.first_cell_of_quad(static_cast<std::size_t>(r * cols + c));
      for (std::size_t t = 0; t < tpq; ++t) out.push_back(first + t);
    }
  }
  return out;
}

namespace {

// Best cell among candidates: first containing cell in index order, else the
// one with the largest minimum weight.
std::size_t best_cell(const DeformedGrid& grid, Vec2 point, std::span<const std::size_t> cells,
                      bool& found) {
  std::size_t best = GridTopology::npos;
  double best_weight = -std::numeric_limits<double>::infinity();
  found = false;
  for (const std::size_t k : cells) {
    const Triangle tri = grid.triangle(k);
    if (std::fabs(signed_area(tri)) <= kDegenerateArea) continue;
    const double w = barycentric(point, tri, k).min_weight();
    if (w >= -kInsideTolerance) {
      if (!found || k < best) {
        best = k;
        found = true;
      }
    } else if (!found && w > best_weight) {
      best_weight = w;
      best = k;
    }
  }
  return best;
}

}  // namespace

std::size_t locate_cell(const DeformedGrid& grid, Vec2 point) {
  bool found = false;
  const auto near = cells_near_quad(grid.topology(), grid.lattice_quad(point), 1);
  std::size_t k = best_cell(grid, point, near, found);
  if (found) return k;
  const auto all = cells_near_quad(grid.topology(), 0, -1);
  k = best_cell(grid, point, all, found);
  if (k == GridTopology::npos) throw InvalidGrid("all cells are degenerate");
  return k;
}

std::vector<std::size_t> rasterize_cells(const DeformedGrid& grid, std::size_t width,
                                         std::size_t height) {
  std::vector<std::size_t> labels(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      labels[y * width + x] =
          locate_cell(grid, {static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5});
    }
  }
  return labels;
}

}  // namespace defgrid
