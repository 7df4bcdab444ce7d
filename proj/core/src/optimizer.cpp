#include "defgrid/optimizer.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace defgrid {

std::string_view to_string(FlipGuard guard) {
  return guard == FlipGuard::kBacktrack ? "backtrack" : "reject";
}

FlipGuard parse_flip_guard(std::string_view name) {
  if (name == "backtrack") return FlipGuard::kBacktrack;
  if (name == "reject") return FlipGuard::kReject;
  throw InvalidArgument(fmt::format("unknown flip guard '{}'", name));
}

void OptimizerConfig::validate() const {
  if (!(max_offset > 0.0 && max_offset < 0.5)) {
    throw InvalidArgument("max_offset must lie in (0, 0.5)");
  }
  if (step_size && !(*step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  if (!(step_decay > 0.0)) throw InvalidArgument("step_decay must be positive");
  weights.validate();
}

namespace {

constexpr int kMaxHalvings = 10;
constexpr double kConvergedGradient = 1e-12;
constexpr double kEnergySlack = 1e-9;

IterationRecord make_record(std::size_t it, const EnergyReport& rep) {
  IterationRecord r;
  r.iteration = it;
  r.l_var = rep.l_var;
  r.l_recons = rep.l_recons;
  r.l_area = rep.l_area;
  r.l_lap = rep.l_lap;
  r.l_total = rep.l_total;
  return r;
}

}  // namespace

OptimizationTrace deform(const DeformedGrid& grid, const FeatureMap& features,
                         const OptimizerConfig& config) {
  return deform(grid, features, config, StepObserver{});
}

OptimizationTrace deform(const DeformedGrid& grid, const FeatureMap& features,
                         const OptimizerConfig& config, const StepObserver& observer) {
  config.validate();
  if (min_signed_area(grid) <= kAreaFloor) {
    throw InvalidGrid("input grid has a cell at or below the area floor");
  }
  OptimizationTrace trace{{}, grid};
  DeformedGrid& current = trace.final_grid;
  EnergyReport rep = total_energy(current, features, config.weights);
  trace.records.push_back(make_record(0, rep));

  const double pitch = current.pitch();
  const double max_abs = config.max_offset * pitch;
  double step = config.step_size.value_or(0.1 * pitch);
  const std::size_t n = current.vertex_count();
  std::vector<Vec2> trial(n);

  double last_accepted = step;
  bool converged = false;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    IterationRecord record = make_record(it, rep);
    record.step = step;
    if (converged) {
      trace.records.push_back(record);
      if (observer) observer(record, current);
      continue;
    }
    double gmax = 0.0;
    for (const Vec2& g : rep.grad) {
      if (!std::isfinite(g.x) || !std::isfinite(g.y)) throw NumericFailure(it);
      gmax = std::max({gmax, std::fabs(g.x), std::fabs(g.y)});
    }
    if (gmax <= kConvergedGradient) {
      converged = true;
      trace.records.push_back(record);
      if (observer) observer(record, current);
      continue;
    }
    double s = std::min(step, 2.0 * last_accepted);
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] =
            current.constrain_offset(i, current.offset(i) - (s / gmax) * rep.grad[i], max_abs);
      }
      DeformedGrid candidate = current;
      candidate.set_offsets(trial);
      if (min_signed_area(candidate) > kAreaFloor) {
        EnergyReport next = total_energy(candidate, features, config.weights);
        if (next.l_total <= rep.l_total + kEnergySlack * std::fabs(rep.l_total)) {
          double moved = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            moved = std::max(moved, norm(candidate.position(i) - current.position(i)));
          }
          current = std::move(candidate);
          rep = std::move(next);
          record = make_record(it, rep);
          record.step = s;
          record.accepted = true;
          record.max_displacement = moved;
          record.backtracks = static_cast<std::size_t>(attempt);
          last_accepted = s;
          accepted = true;
          break;
        }
      }
      if (config.flip_guard == FlipGuard::kReject) break;
      s *= 0.5;
      record.backtracks = static_cast<std::size_t>(attempt) + 1;
    }
    if (!accepted && config.flip_guard == FlipGuard::kBacktrack) converged = true;
    trace.records.push_back(record);
    if (observer) observer(record, current);
    step *= config.step_decay;
  }
  return trace;
}

DeformedGrid apply_external_offsets(const DeformedGrid& grid, std::span<const Vec2> offsets,
                                    double max_offset) {
  if (offsets.size() != grid.vertex_count()) {
    throw DimensionMismatch(
        fmt::format("expected {} offsets, got {}", grid.vertex_count(), offsets.size()));
  }
  if (!(max_offset > 0.0 && max_offset < 0.5)) {
    throw InvalidArgument("max_offset must lie in (0, 0.5)");
  }
  const double max_abs = max_offset * grid.pitch();
  std::vector<Vec2> constrained(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    constrained[i] = grid.constrain_offset(i, offsets[i], max_abs);
  }
  DeformedGrid out = grid;
  out.set_offsets(constrained);
  auto flipped = cells_at_or_below(out, kAreaFloor);
  if (!flipped.empty()) throw FlippedCells(std::move(flipped));
  return out;
}

}  // namespace defgrid
