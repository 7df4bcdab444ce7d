#pragma once

#include "defgrid/partition.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace defgrid {

/// Sum over predicted segments of their largest overlap with one ground
/// truth segment, divided by the pixel count.
double metric_asa(const SegmentationMap& pred, const SegmentationMap& gt);

/// Pixels with a 4-neighbor carrying a different id.
std::vector<std::uint8_t> boundary_map(const SegmentationMap& map);

struct BoundaryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Boundary pixels match when within Chebyshev distance `tolerance`. An
/// empty boundary set scores 1 against another empty set and 0 otherwise.
BoundaryScore metric_boundary(const SegmentationMap& pred, const SegmentationMap& gt,
                              std::size_t tolerance);

/// Same, for binary masks (ids are the mask values).
BoundaryScore mask_boundary_f(std::span<const std::uint8_t> pred,
                              std::span<const std::uint8_t> gt, std::size_t width,
                              std::size_t height, std::size_t tolerance);

/// |pred & gt| / |pred | gt|; 1 when both are empty.
double metric_miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

}  // namespace defgrid
