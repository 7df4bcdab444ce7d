#pragma once

#include "defgrid/assignment.hpp"
#include "defgrid/grid.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace defgrid {

enum class AffinityAveraging {
  kArithmetic,     // plain mean of the two merged affinities
  kPixelWeighted,  // weighted by the merged clusters' pixel counts
};

std::string_view to_string(AffinityAveraging averaging);
AffinityAveraging parse_affinity_averaging(std::string_view name);

struct ClusterNode {
  std::vector<std::size_t> cells;  // sorted
  std::array<double, 3> mean_rgb{};
  std::size_t pixel_count = 0;
};

/// Cluster adjacency with affinities in [0, 1]; two clusters are adjacent
/// when their cells share a grid edge.
struct AffinityGraph {
  std::vector<ClusterNode> nodes;
  std::vector<std::map<std::size_t, double>> adjacency;
  std::size_t pixel_total = 0;

  std::size_t node_count() const { return nodes.size(); }
  double affinity(std::size_t u, std::size_t v) const;
};

inline constexpr double kDefaultAffinitySigma = 0.1;

/// One node per cell with exp(-|mean_u - mean_v|^2 / sigma^2) affinities.
/// Cell means are the hard means of the first three channels, falling back
/// to the soft mean for cells without a pixel center.
AffinityGraph build_affinity(const DeformedGrid& grid, const CellStats& stats,
                             double sigma = kDefaultAffinitySigma);

struct AgglomerateOptions {
  std::size_t target = 1;
  /// Stop once the best affinity drops below this value.
  std::optional<double> threshold;
  AffinityAveraging averaging = AffinityAveraging::kArithmetic;

  void validate() const;
};

struct SegmentationMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> ids;

  int at(std::size_t x, std::size_t y) const { return ids[y * width + x]; }
  std::size_t segment_count() const;
};

struct ClusterBoundary {
  /// Closed loops of grid vertices. Positive signed area marks an outer
  /// boundary, negative a hole.
  std::vector<std::vector<std::size_t>> loops;
  std::vector<double> signed_area;
};

struct PartitionResult {
  std::vector<std::size_t> cell_cluster;  // dense ids, ordered by lowest member cell
  std::size_t cluster_count = 0;
  std::size_t merges = 0;
  /// Set when the requested target exceeded the number of cells.
  bool target_exceeded = false;
  AffinityGraph graph;  // final clusters, indexed by dense id
  SegmentationMap segmentation;
  std::vector<ClusterBoundary> boundaries;
};

/// Greedy agglomeration: repeatedly merges the highest-affinity pair
/// (ties: lexicographically smallest id pair) into the smaller id.
PartitionResult agglomerate(const DeformedGrid& grid, AffinityGraph graph,
                            const AgglomerateOptions& options, std::size_t width,
                            std::size_t height);

/// Oriented boundary loops of a set of cells under a cell -> cluster map.
std::vector<ClusterBoundary> cluster_boundaries(const DeformedGrid& grid,
                                                const std::vector<std::size_t>& cell_cluster,
                                                std::size_t cluster_count);

}  // namespace defgrid
