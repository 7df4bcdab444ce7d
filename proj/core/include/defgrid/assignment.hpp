#pragma once

#include "defgrid/features.hpp"
#include "defgrid/geometry.hpp"
#include "defgrid/grid.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace defgrid {

/// SignDis of a point against one triangle, plus the data needed to
/// differentiate it. `edge` is the minimizing edge (0: a-b, 1: b-c, 2: c-a),
/// lowest index on ties.
struct SignedDistance {
  double value = 0.0;
  int edge = 0;
  bool inside = false;
  SegmentProjection projection;
};

/// Min over edges of the L1 point-segment distance, positive inside the
/// triangle and negative outside. Throws DegenerateCell.
SignedDistance signed_distance(Vec2 point, const Triangle& tri, std::size_t cell = 0);

inline double sign_dis(Vec2 point, const Triangle& tri, std::size_t cell = 0) {
  return signed_distance(point, tri, cell).value;
}

struct AssignmentOptions {
  /// Softmax temperature in pixels.
  double delta = 1.0;
  /// Candidate cells come from quads within this many quads of the pixel's
  /// base-lattice quad. Negative: softmax over every cell.
  int window_radius = 2;
};

struct AssignmentEntry {
  std::size_t cell = 0;
  double sign_dis = 0.0;
  double probability = 0.0;
};

/// Sparse soft assignment of pixel centers to cells plus hard labels.
class AssignmentField;
AssignmentField soft_assign_detailed(const DeformedGrid&, std::size_t, std::size_t,
                                     const AssignmentOptions&, std::vector<SignedDistance>*);

class AssignmentField {
 public:
  AssignmentField(std::size_t width, std::size_t height, std::size_t cell_count,
                  AssignmentOptions options);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }
  std::size_t cell_count() const { return cell_count_; }
  const AssignmentOptions& options() const { return options_; }

  std::span<const AssignmentEntry> row(std::size_t pixel) const {
    return std::span<const AssignmentEntry>(entries_).subspan(
        row_offsets_[pixel], row_offsets_[pixel + 1] - row_offsets_[pixel]);
  }
  std::span<const std::size_t> hard_labels() const { return hard_label_; }
  std::size_t hard_label(std::size_t pixel) const { return hard_label_[pixel]; }

  /// Probability of pixel -> cell, zero when the cell is not a candidate.
  double probability(std::size_t pixel, std::size_t cell) const;

 private:
  friend AssignmentField soft_assign_detailed(const DeformedGrid&, std::size_t, std::size_t,
                                              const AssignmentOptions&,
                                              std::vector<SignedDistance>*);

  std::size_t width_;
  std::size_t height_;
  std::size_t cell_count_;
  AssignmentOptions options_;
  std::vector<std::size_t> row_offsets_;
  std::vector<AssignmentEntry> entries_;
  std::vector<std::size_t> hard_label_;
};

inline Vec2 pixel_center(std::size_t pixel, std::size_t width) {
  return {static_cast<double>(pixel % width) + 0.5, static_cast<double>(pixel / width) + 0.5};
}

/// Softmax of SignDis / delta over candidate cells for every pixel center.
/// Throws InvalidGrid when a cell has non-positive area, InvalidArgument when
/// delta <= 0.
AssignmentField soft_assign(const DeformedGrid& grid, std::size_t width, std::size_t height,
                            const AssignmentOptions& options = {});

/// soft_assign that also returns the SignDis geometry of every entry, in
/// entry order, for gradient evaluation.
AssignmentField soft_assign_detailed(const DeformedGrid& grid, std::size_t width,
                                     std::size_t height, const AssignmentOptions& options,
                                     std::vector<SignedDistance>* geometry);

struct CellStats {
  std::size_t channels = 0;
  std::vector<double> mass;             // m_k = sum_i P(i->k)
  std::vector<double> soft_mean;        // K x d, zero when m_k == 0
  std::vector<std::size_t> hard_count;  // |S_k|
  std::vector<double> hard_mean;        // K x d, zero when |S_k| == 0
  std::vector<bool> empty;              // m_k == 0

  std::span<const double> soft_mean_of(std::size_t k) const {
    return std::span<const double>(soft_mean).subspan(k * channels, channels);
  }
  std::span<const double> hard_mean_of(std::size_t k) const {
    return std::span<const double>(hard_mean).subspan(k * channels, channels);
  }
};

CellStats cell_stats(const AssignmentField& assign, const FeatureMap& features);

}  // namespace defgrid
