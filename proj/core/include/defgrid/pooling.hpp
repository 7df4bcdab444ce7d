#pragma once

#include "defgrid/features.hpp"
#include "defgrid/grid.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace defgrid {

enum class PoolMode { kMean, kMax };

std::string_view to_string(PoolMode mode);
PoolMode parse_pool_mode(std::string_view name);

/// Per-cell feature vectors in topology cell order: row-major by quad, then
/// by triangle within the quad. This order is the stable downstream contract.
struct CellFeatureGrid {
  std::shared_ptr<const GridTopology> topology;
  std::size_t channels = 0;
  PoolMode mode = PoolMode::kMean;
  std::vector<double> values;  // K x channels
  /// Cells with no pixel center; their value is copied from the non-empty
  /// cell with the nearest centroid.
  std::vector<bool> empty;

  std::size_t cell_count() const { return empty.size(); }
  std::span<const double> value(std::size_t k) const {
    return std::span<const double>(values).subspan(k * channels, channels);
  }
};

/// Hard (pixel-center) pooling of features into cells.
CellFeatureGrid grid_pool(const DeformedGrid& grid, const FeatureMap& features, PoolMode mode);

/// Each pixel takes the value of the cell containing its center.
FeatureMap paste_back(const DeformedGrid& grid, const CellFeatureGrid& cells, std::size_t width,
                      std::size_t height);

struct CellLabels {
  std::vector<int> label;                   // majority label, 0 = background
  std::vector<double> foreground_fraction;  // share of pixels with label != 0
  std::vector<std::size_t> pixel_count;
  std::vector<bool> empty;                  // no pixel center; labeled background
};

/// Majority label per cell; ties between the top labels go to background
/// when it is among them, otherwise to the smallest label.
CellLabels label_cells(const DeformedGrid& grid, std::span<const int> mask, std::size_t width,
                       std::size_t height);

/// Per-pixel labels painted from the cells (the polygonal mask).
std::vector<int> rasterize_cell_labels(const DeformedGrid& grid, const CellLabels& labels,
                                       std::size_t width, std::size_t height);

}  // namespace defgrid
