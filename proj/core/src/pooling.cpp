#include "defgrid/pooling.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <map>

namespace defgrid {

std::string_view to_string(PoolMode mode) { return mode == PoolMode::kMean ? "mean" : "max"; }

PoolMode parse_pool_mode(std::string_view name) {
  if (name == "mean") return PoolMode::kMean;
  if (name == "max") return PoolMode::kMax;
  throw InvalidArgument(fmt::format("unknown pool mode '{}'", name));
}

namespace {

Vec2 centroid(const Triangle& t) {
  return {(t[0].x + t[1].x + t[2].x) / 3.0, (t[0].y + t[1].y + t[2].y) / 3.0};
}

void check_extent(const DeformedGrid& grid, std::size_t width, std::size_t height) {
  if (static_cast<double>(width) != grid.width() || static_cast<double>(height) != grid.height()) {
    throw DimensionMismatch(fmt::format("image {}x{} does not match grid extent {}x{}", width,
                                        height, grid.width(), grid.height()));
  }
}

}  // namespace

CellFeatureGrid grid_pool(const DeformedGrid& grid, const FeatureMap& features, PoolMode mode) {
  check_extent(grid, features.width(), features.height());
  const std::size_t k_count = grid.cell_count();
  const std::size_t d = features.channels();
  CellFeatureGrid out;
  out.topology = grid.topology_ptr();
  out.channels = d;
  out.mode = mode;
  out.values.assign(k_count * d, mode == PoolMode::kMax
                                     ? -std::numeric_limits<double>::infinity()
                                     : 0.0);
  out.empty.assign(k_count, true);
  std::vector<std::size_t> count(k_count, 0);

  const auto labels = rasterize_cells(grid, features.width(), features.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t k = labels[i];
    const auto f = features.pixel(i);
    double* v = &out.values[k * d];
    const double n = static_cast<double>(++count[k]);
    // Running mean: a cell of identical values pools to exactly that value.
    for (std::size_t c = 0; c < d; ++c) {
      v[c] = mode == PoolMode::kMax ? std::max(v[c], f[c]) : v[c] + (f[c] - v[c]) / n;
    }
    out.empty[k] = false;
  }

  std::vector<Vec2> centers(k_count);
  for (std::size_t k = 0; k < k_count; ++k) centers[k] = centroid(grid.triangle(k));
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!out.empty[k]) continue;
    std::size_t best = GridTopology::npos;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k_count; ++j) {
      if (out.empty[j]) continue;
      const Vec2 diff = centers[j] - centers[k];
      const double d2 = dot(diff, diff);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    if (best == GridTopology::npos) break;  // no pixels at all
    std::copy_n(out.values.begin() + static_cast<std::ptrdiff_t>(best * d), d,
                out.values.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return out;
}

FeatureMap paste_back(const DeformedGrid& grid, const CellFeatureGrid& cells, std::size_t width,
                      std::size_t height) {
  check_extent(grid, width, height);
  if (cells.cell_count() != grid.cell_count()) {
    throw DimensionMismatch("cell values do not match the grid topology");
  }
  FeatureMap out(width, height, cells.channels);
  const auto labels = rasterize_cells(grid, width, height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = cells.value(labels[i]);
    std::copy(v.begin(), v.end(), out.pixel(i).begin());
  }
  return out;
}

CellLabels label_cells(const DeformedGrid& grid, std::span<const int> mask, std::size_t width,
                       std::size_t height) {
  check_extent(grid, width, height);
  if (mask.size() != width * height) throw DimensionMismatch("mask size does not match extent");
  const std::size_t k_count = grid.cell_count();
  std::vector<std::map<int, std::size_t>> votes(k_count);
  const auto labels = rasterize_cells(grid, width, height);
  for (std::size_t i = 0; i < labels.size(); ++i) ++votes[labels[i]][mask[i]];

  CellLabels out;
  out.label.assign(k_count, 0);
  out.foreground_fraction.assign(k_count, 0.0);
  out.pixel_count.assign(k_count, 0);
  out.empty.assign(k_count, false);
  for (std::size_t k = 0; k < k_count; ++k) {
    std::size_t total = 0;
    std::size_t foreground = 0;
    std::size_t best_votes = 0;
    int best_label = 0;
    for (const auto& [label, n] : votes[k]) {  // ascending label order
      total += n;
      if (label != 0) foreground += n;
      if (n > best_votes) {
        best_votes = n;
        best_label = label;
      }
    }
    const auto bg = votes[k].find(0);
    if (bg != votes[k].end() && bg->second == best_votes) best_label = 0;
    out.pixel_count[k] = total;
    out.empty[k] = total == 0;
    out.label[k] = total == 0 ? 0 : best_label;
    out.foreground_fraction[k] =
        total == 0 ? 0.0 : static_cast<double>(foreground) / static_cast<double>(total);
  }
  return out;
}

std::vector<int> rasterize_cell_labels(const DeformedGrid& grid, const CellLabels& labels,
                                       std::size_t width, std::size_t height) {
  check_extent(grid, width, height);
  const auto cells = rasterize_cells(grid, width, height);
  std::vector<int> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = labels.label[cells[i]];
  return out;
}

}  // namespace defgrid
