#pragma once

#include "defgrid/assignment.hpp"
#include "defgrid/features.hpp"
#include "defgrid/grid.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace defgrid {

/// Whether the gradient flows through the soft cell means.
enum class MeanMode { kSoftGrad, kStopGrad };

std::string_view to_string(MeanMode mode);
MeanMode parse_mean_mode(std::string_view name);

struct LossWeights {
  double lambda_recons = 0.5;
  double lambda_area = 0.02;
  double lambda_lap = 0.1;
  double delta = 0.5;
  int window_radius = 2;
  MeanMode mean_mode = MeanMode::kSoftGrad;

  void validate() const;
  AssignmentOptions assignment() const { return {delta, window_radius}; }
};

/// Loss values and the gradient of each term w.r.t. every vertex position.
///
/// l_area is normalized by the nominal cell area (width * height / K) so that
/// lambda_area does not depend on resolution. Gradients of frozen coordinates
/// (corners, border normals) are zero.
struct EnergyReport {
  double l_var = 0.0;
  double l_recons = 0.0;
  double l_area = 0.0;
  double l_lap = 0.0;
  double l_total = 0.0;
  std::vector<Vec2> grad;
  // Unweighted per-term gradients.
  std::vector<Vec2> grad_var;
  std::vector<Vec2> grad_recons;
  std::vector<Vec2> grad_area;
  std::vector<Vec2> grad_lap;
};

/// sum_k sum_i P(i->k) |f_i - mean_k|^2 with the soft means in `stats`.
double loss_variance(const AssignmentField& assign, const FeatureMap& features,
                     const CellStats& stats);

/// sum_i |sum_k P(i->k) mean_k - f_i|_1.
double loss_reconstruction(const AssignmentField& assign, const FeatureMap& features,
                           const CellStats& stats);

/// sum_k (a_k - mean area)^2 in px^4 (unnormalized).
double loss_area(const DeformedGrid& grid);

/// width * height / K.
double nominal_cell_area(const DeformedGrid& grid);

/// sum_i |offset_i - mean of neighbor offsets|^2.
double loss_laplacian(const DeformedGrid& grid);

/// All four losses, the weighted total, and analytic gradients.
/// Throws InvalidGrid / DimensionMismatch.
EnergyReport total_energy(const DeformedGrid& grid, const FeatureMap& features,
                          const LossWeights& weights);

/// Same as total_energy but with cell means held at `fixed_means` (K x d).
/// The gradient is the exact gradient of this fixed-mean objective, which is
/// what MeanMode::kStopGrad reports at the point where the means were taken.
EnergyReport energy_with_fixed_means(const DeformedGrid& grid, const FeatureMap& features,
                                     const LossWeights& weights,
                                     std::span<const double> fixed_means);

/// Zeroes gradient components the grid constraints freeze.
void project_gradient(const DeformedGrid& grid, std::span<Vec2> grad);

}  // namespace defgrid
