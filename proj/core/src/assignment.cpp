#include "defgrid/assignment.hpp"

#include "defgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace defgrid {

SignedDistance signed_distance(Vec2 point, const Triangle& tri, std::size_t cell) {
  const BarycentricCoords w = barycentric(point, tri, cell);
  SignedDistance out;
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < 3; ++e) {
    const SegmentProjection proj = project_onto_segment(point, tri[e], tri[(e + 1) % 3]);
    if (proj.l1 < best) {
      best = proj.l1;
      out.edge = e;
      out.projection = proj;
    }
  }
  out.inside = w.inside();
  out.value = out.inside ? best : -best;
  return out;
}

AssignmentField::AssignmentField(std::size_t width, std::size_t height, std::size_t cell_count,
                                 AssignmentOptions options)
    : width_(width), height_(height), cell_count_(cell_count), options_(options) {}

double AssignmentField::probability(std::size_t pixel, std::size_t cell) const {
  for (const auto& e : row(pixel)) {
    if (e.cell == cell) return e.probability;
  }
  return 0.0;
}

AssignmentField soft_assign(const DeformedGrid& grid, std::size_t width, std::size_t height,
                            const AssignmentOptions& options) {
  return soft_assign_detailed(grid, width, height, options, nullptr);
}

AssignmentField soft_assign_detailed(const DeformedGrid& grid, std::size_t width,
                                     std::size_t height, const AssignmentOptions& options,
                                     std::vector<SignedDistance>* geometry) {
  if (!(options.delta > 0.0)) throw InvalidArgument("delta must be positive");
  const auto bad = cells_at_or_below(grid, 0.0);
  if (!bad.empty()) {
    throw InvalidGrid("grid has cells with non-positive area");
  }

  AssignmentField field(width, height, grid.cell_count(), options);
  const std::size_t n = width * height;
  field.row_offsets_.reserve(n + 1);
  field.row_offsets_.push_back(0);
  field.hard_label_.resize(n);

  const auto& topo = grid.topology();
  std::vector<Triangle> tris(grid.cell_count());
  for (std::size_t k = 0; k < tris.size(); ++k) tris[k] = grid.triangle(k);

  // Candidate lists depend only on the base quad; cache them.
  std::vector<std::vector<std::size_t>> candidates(topo.rows() * topo.cols());
  for (std::size_t q = 0; q < candidates.size(); ++q) {
    candidates[q] = cells_near_quad(topo, q, options.window_radius);
  }
  std::vector<std::size_t> pixel_quad(n);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pixel_quad[i] = grid.lattice_quad(pixel_center(i, width));
    total += candidates[pixel_quad[i]].size();
  }
  field.entries_.reserve(total);
  if (geometry) geometry->reserve(geometry->size() + total);

  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = pixel_center(i, width);
    const auto& cand = candidates[pixel_quad[i]];
    const std::size_t start = field.entries_.size();
    double max_s = -std::numeric_limits<double>::infinity();
    std::size_t inside_cell = GridTopology::npos;
    for (const std::size_t k : cand) {
      const SignedDistance sd = signed_distance(p, tris[k], k);
      field.entries_.push_back({k, sd.value, 0.0});
      if (geometry) geometry->push_back(sd);
      max_s = std::max(max_s, sd.value);
      if (sd.inside && k < inside_cell) inside_cell = k;
    }
    double z = 0.0;
    for (std::size_t e = start; e < field.entries_.size(); ++e) {
      auto& entry = field.entries_[e];
      entry.probability = std::exp((entry.sign_dis - max_s) / options.delta);
      z += entry.probability;
    }
    for (std::size_t e = start; e < field.entries_.size(); ++e) {
      field.entries_[e].probability /= z;
    }
    field.row_offsets_.push_back(field.entries_.size());
    // Any cell containing p lies within one quad of its base quad.
    field.hard_label_[i] = (inside_cell != GridTopology::npos && options.window_radius != 0)
                               ? inside_cell
                               : locate_cell(grid, p);
  }
  return field;
}

CellStats cell_stats(const AssignmentField& assign, const FeatureMap& features) {
  if (features.width() != assign.width() || features.height() != assign.height()) {
    throw DimensionMismatch("feature map extent differs from assignment extent");
  }
  const std::size_t k_count = assign.cell_count();
  const std::size_t d = features.channels();
  CellStats s;
  s.channels = d;
  s.mass.assign(k_count, 0.0);
  s.soft_mean.assign(k_count * d, 0.0);
  s.hard_count.assign(k_count, 0);
  s.hard_mean.assign(k_count * d, 0.0);
  s.empty.assign(k_count, false);

  for (std::size_t i = 0; i < assign.pixel_count(); ++i) {
    const auto f = features.pixel(i);
    for (const auto& e : assign.row(i)) {
      s.mass[e.cell] += e.probability;
      double* mean = &s.soft_mean[e.cell * d];
      for (std::size_t c = 0; c < d; ++c) mean[c] += e.probability * f[c];
    }
    const std::size_t h = assign.hard_label(i);
    ++s.hard_count[h];
    double* hmean = &s.hard_mean[h * d];
    for (std::size_t c = 0; c < d; ++c) hmean[c] += f[c];
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    if (s.mass[k] > 0.0) {
      for (std::size_t c = 0; c < d; ++c) s.soft_mean[k * d + c] /= s.mass[k];
    } else {
      s.empty[k] = true;
      std::fill_n(s.soft_mean.begin() + static_cast<std::ptrdiff_t>(k * d), d, 0.0);
    }
    if (s.hard_count[k] > 0) {
      for (std::size_t c = 0; c < d; ++c) {
        s.hard_mean[k * d + c] /= static_cast<double>(s.hard_count[k]);
      }
    }
  }
  return s;
}

}  // namespace defgrid
