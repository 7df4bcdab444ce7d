#pragma once

#include "defgrid/energy.hpp"
#include "defgrid/features.hpp"
#include "defgrid/grid.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace defgrid {

/// What to do with a step that folds a cell or raises the energy.
enum class FlipGuard {
  kBacktrack,  // halve the step up to 10 times, then skip
  kReject,     // skip immediately
};

std::string_view to_string(FlipGuard guard);
FlipGuard parse_flip_guard(std::string_view name);

/// Cells must keep at least this much signed area (px^2).
inline constexpr double kAreaFloor = 1e-3;
/// Default offset bound as a fraction of the grid pitch.
inline constexpr double kDefaultMaxOffset = 0.45;

struct OptimizerConfig {
  std::size_t iterations = 500;
  /// Largest vertex move of the first step, in px. Unset: 0.1 * pitch.
  std::optional<double> step_size;
  double step_decay = 0.997;
  /// Offset bound per component as a fraction of pitch; in (0, 0.5).
  double max_offset = kDefaultMaxOffset;
  FlipGuard flip_guard = FlipGuard::kBacktrack;
  /// Recorded with the trace. The descent itself draws no random numbers.
  std::uint64_t seed = 0;
  LossWeights weights;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double l_var = 0.0;
  double l_recons = 0.0;
  double l_area = 0.0;
  double l_lap = 0.0;
  double l_total = 0.0;
  /// Largest vertex move made by this iteration's step (0 when skipped).
  double max_displacement = 0.0;
  double step = 0.0;
  bool accepted = false;
  std::size_t backtracks = 0;
};

struct OptimizationTrace {
  /// records[0] is the initial state; records[t] follows iteration t.
  std::vector<IterationRecord> records;
  DeformedGrid final_grid;
};

/// Gradient descent on vertex offsets. Every exposed grid keeps all cell
/// areas above kAreaFloor and accepted steps never raise l_total.
/// Throws InvalidArgument, InvalidGrid, NumericFailure.
OptimizationTrace deform(const DeformedGrid& grid, const FeatureMap& features,
                         const OptimizerConfig& config);

/// Called after every iteration with its record and the grid it left.
using StepObserver = std::function<void(const IterationRecord&, const DeformedGrid&)>;

OptimizationTrace deform(const DeformedGrid& grid, const FeatureMap& features,
                         const OptimizerConfig& config, const StepObserver& observer);

/// Clamps externally predicted offsets (per component, max_offset * pitch,
/// border constraints) and applies them. Throws FlippedCells listing every
/// cell whose area would drop to kAreaFloor or below.
DeformedGrid apply_external_offsets(const DeformedGrid& grid, std::span<const Vec2> offsets,
                                    double max_offset = kDefaultMaxOffset);

}  // namespace defgrid
