#include "defgrid/energy.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace defgrid {

std::string_view to_string(MeanMode mode) {
  return mode == MeanMode::kSoftGrad ? "soft-grad" : "stop-grad";
}

MeanMode parse_mean_mode(std::string_view name) {
  if (name == "soft-grad") return MeanMode::kSoftGrad;
  if (name == "stop-grad") return MeanMode::kStopGrad;
  throw InvalidArgument(fmt::format("unknown mean mode '{}'", name));
}

void LossWeights::validate() const {
  if (!(lambda_recons >= 0.0) || !(lambda_area >= 0.0) || !(lambda_lap >= 0.0)) {
    throw InvalidArgument("loss weights must be non-negative");
  }
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
}

namespace {

void check_extent(const AssignmentField& assign, const FeatureMap& features,
                  const CellStats& stats) {
  if (features.width() != assign.width() || features.height() != assign.height() ||
      stats.channels != features.channels() ||
      stats.soft_mean.size() != assign.cell_count() * features.channels()) {
    throw DimensionMismatch("assignment, features and cell stats disagree");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// d(L1 distance)/d(segment endpoints) for the closest-point projection.
void l1_distance_gradient(Vec2 point, Vec2 a, Vec2 b, const SegmentProjection& proj,
                          Vec2& d_a, Vec2& d_b) {
  const Vec2 u = point - proj.closest;
  const Vec2 g{sign_of(u.x), sign_of(u.y)};
  const Vec2 e = b - a;
  const double len2 = dot(e, e);
  if (proj.clamped || len2 <= 0.0) {
    if (proj.t >= 1.0 && len2 > 0.0) {
      d_a = {};
      d_b = -1.0 * g;
    } else {
      d_a = -1.0 * g;
      d_b = {};
    }
    return;
  }
  const double t = proj.t;
  const Vec2 w = point - a;
  const Vec2 dt_da = (1.0 / len2) * (-1.0 * e - w + 2.0 * t * e);
  const Vec2 dt_db = (1.0 / len2) * (w - 2.0 * t * e);
  const double ge = dot(g, e);
  d_a = -1.0 * ((1.0 - t) * g + ge * dt_da);
  d_b = -1.0 * (t * g + ge * dt_db);
}

void add_area_gradient(const DeformedGrid& grid, std::span<Vec2> grad, double& loss) {
  const std::vector<double> areas = signed_areas(grid);
  double mean = 0.0;
  for (double a : areas) mean += a;
  mean /= static_cast<double>(areas.size());
  const double norm = nominal_cell_area(grid);
  const double inv2 = 1.0 / (norm * norm);
  loss = 0.0;
  for (std::size_t k = 0; k < areas.size(); ++k) {
    const double dev = areas[k] - mean;
    loss += dev * dev * inv2;
    // The mean-area term cancels: sum_k (a_k - mean) = 0.
    const double dl_da = 2.0 * dev * inv2;
    const auto& idx = grid.topology().cell(k);
    for (int j = 0; j < 3; ++j) {
      const Vec2 p1 = grid.position(idx[(j + 1) % 3]);
      const Vec2 p2 = grid.position(idx[(j + 2) % 3]);
      grad[idx[j]] += dl_da * Vec2{0.5 * (p1.y - p2.y), 0.5 * (p2.x - p1.x)};
    }
  }
}

void add_laplacian_gradient(const DeformedGrid& grid, std::span<Vec2> grad, double& loss) {
  const auto& topo = grid.topology();
  const std::size_t n = grid.vertex_count();
  std::vector<Vec2> residual(n);
  loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = topo.neighbors(i);
    Vec2 mean{};
    for (std::size_t j : nbrs) mean += grid.offset(j);
    mean = (1.0 / static_cast<double>(nbrs.size())) * mean;
    residual[i] = grid.offset(i) - mean;
    loss += dot(residual[i], residual[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = topo.neighbors(i);
    grad[i] += 2.0 * residual[i];
    const double share = 2.0 / static_cast<double>(nbrs.size());
    for (std::size_t j : nbrs) grad[j] -= share * residual[i];
  }
}

EnergyReport evaluate(const DeformedGrid& grid, const FeatureMap& features,
                      const LossWeights& weights, std::span<const double> fixed_means) {
  weights.validate();
  if (static_cast<double>(features.width()) != grid.width() ||
      static_cast<double>(features.height()) != grid.height()) {
    throw DimensionMismatch("feature map extent differs from the grid extent");
  }
  const std::size_t n = grid.vertex_count();
  const std::size_t d = features.channels();
  std::vector<SignedDistance> geometry;
  const AssignmentField assign = soft_assign_detailed(grid, features.width(), features.height(),
                                                      weights.assignment(), &geometry);
  CellStats stats = cell_stats(assign, features);
  const bool frozen = !fixed_means.empty();
  if (frozen) {
    if (fixed_means.size() != stats.soft_mean.size()) {
      throw DimensionMismatch("fixed means have the wrong size");
    }
    stats.soft_mean.assign(fixed_means.begin(), fixed_means.end());
  }
  const bool through_means = !frozen && weights.mean_mode == MeanMode::kSoftGrad;
  const std::size_t k_count = grid.cell_count();

  EnergyReport rep;
  rep.l_var = loss_variance(assign, features, stats);

  // Reconstruction residual signs, and B_kc = sum_i sgn_ic P(i->k).
  const std::size_t npix = assign.pixel_count();
  std::vector<double> residual_sign(npix * d);
  std::vector<double> recon(d);
  std::vector<double> b_kc(through_means ? k_count * d : 0, 0.0);
  rep.l_recons = 0.0;
  for (std::size_t i = 0; i < npix; ++i) {
    std::fill(recon.begin(), recon.end(), 0.0);
    for (const auto& e : assign.row(i)) {
      const auto mean = stats.soft_mean_of(e.cell);
      for (std::size_t c = 0; c < d; ++c) recon[c] += e.probability * mean[c];
    }
    const auto f = features.pixel(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double r = recon[c] - f[c];
      rep.l_recons += std::fabs(r);
      residual_sign[i * d + c] = sign_of(r);
    }
    if (through_means) {
      for (const auto& e : assign.row(i)) {
        for (std::size_t c = 0; c < d; ++c) {
          b_kc[e.cell * d + c] += residual_sign[i * d + c] * e.probability;
        }
      }
    }
  }

  rep.grad_var.assign(n, Vec2{});
  rep.grad_recons.assign(n, Vec2{});
  rep.grad_area.assign(n, Vec2{});
  rep.grad_lap.assign(n, Vec2{});

  std::vector<Triangle> tris(k_count);
  for (std::size_t k = 0; k < k_count; ++k) tris[k] = grid.triangle(k);

  std::vector<double> g_var;
  std::vector<double> g_rec;
  std::size_t entry_base = 0;
  for (std::size_t i = 0; i < npix; ++i) {
    const auto row = assign.row(i);
    const auto f = features.pixel(i);
    g_var.resize(row.size());
    g_rec.resize(row.size());
    double bar_var = 0.0;
    double bar_rec = 0.0;
    for (std::size_t e = 0; e < row.size(); ++e) {
      const std::size_t k = row[e].cell;
      const auto mean = stats.soft_mean_of(k);
      g_var[e] = squared_distance(f, mean);
      double gr = 0.0;
      for (std::size_t c = 0; c < d; ++c) gr += residual_sign[i * d + c] * mean[c];
      if (through_means && stats.mass[k] > 0.0) {
        double via_mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) via_mean += b_kc[k * d + c] * (f[c] - mean[c]);
        gr += via_mean / stats.mass[k];
      }
      g_rec[e] = gr;
      bar_var += row[e].probability * g_var[e];
      bar_rec += row[e].probability * g_rec[e];
    }
    const Vec2 p = pixel_center(i, features.width());
    const std::size_t base = entry_base;
    entry_base += row.size();
    for (std::size_t e = 0; e < row.size(); ++e) {
      const double pe = row[e].probability / weights.delta;
      const double ds_var = pe * (g_var[e] - bar_var);
      const double ds_rec = pe * (g_rec[e] - bar_rec);
      if (ds_var == 0.0 && ds_rec == 0.0) continue;
      const std::size_t k = row[e].cell;
      const SignedDistance& sd = geometry[base + e];
      const int edge = sd.edge;
      Vec2 d_a;
      Vec2 d_b;
      l1_distance_gradient(p, tris[k][edge], tris[k][(edge + 1) % 3], sd.projection, d_a, d_b);
      const double sigma = sd.inside ? 1.0 : -1.0;
      const auto& idx = grid.topology().cell(k);
      const std::size_t va = idx[edge];
      const std::size_t vb = idx[(edge + 1) % 3];
      rep.grad_var[va] += (sigma * ds_var) * d_a;
      rep.grad_var[vb] += (sigma * ds_var) * d_b;
      rep.grad_recons[va] += (sigma * ds_rec) * d_a;
      rep.grad_recons[vb] += (sigma * ds_rec) * d_b;
    }
  }

  add_area_gradient(grid, rep.grad_area, rep.l_area);
  add_laplacian_gradient(grid, rep.grad_lap, rep.l_lap);

  project_gradient(grid, rep.grad_var);
  project_gradient(grid, rep.grad_recons);
  project_gradient(grid, rep.grad_area);
  project_gradient(grid, rep.grad_lap);

  rep.l_total = rep.l_var + weights.lambda_recons * rep.l_recons +
                weights.lambda_area * rep.l_area + weights.lambda_lap * rep.l_lap;
  rep.grad.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    rep.grad[v] = rep.grad_var[v] + weights.lambda_recons * rep.grad_recons[v] +
                  weights.lambda_area * rep.grad_area[v] + weights.lambda_lap * rep.grad_lap[v];
  }
  return rep;
}

}  // namespace

double loss_variance(const AssignmentField& assign, const FeatureMap& features,
                     const CellStats& stats) {
  check_extent(assign, features, stats);
  double total = 0.0;
  for (std::size_t i = 0; i < assign.pixel_count(); ++i) {
    const auto f = features.pixel(i);
    for (const auto& e : assign.row(i)) {
      total += e.probability * squared_distance(f, stats.soft_mean_of(e.cell));
    }
  }
  return total;
}

double loss_reconstruction(const AssignmentField& assign, const FeatureMap& features,
                           const CellStats& stats) {
  check_extent(assign, features, stats);
  const std::size_t d = features.channels();
  std::vector<double> recon(d);
  double total = 0.0;
  for (std::size_t i = 0; i < assign.pixel_count(); ++i) {
    std::fill(recon.begin(), recon.end(), 0.0);
    for (const auto& e : assign.row(i)) {
      const auto mean = stats.soft_mean_of(e.cell);
      for (std::size_t c = 0; c < d; ++c) recon[c] += e.probability * mean[c];
    }
    const auto f = features.pixel(i);
    for (std::size_t c = 0; c < d; ++c) total += std::fabs(recon[c] - f[c]);
  }
  return total;
}

double loss_area(const DeformedGrid& grid) {
  const std::vector<double> areas = signed_areas(grid);
  double mean = 0.0;
  for (double a : areas) mean += a;
  mean /= static_cast<double>(areas.size());
  double total = 0.0;
  for (double a : areas) total += (a - mean) * (a - mean);
  return total;
}

double nominal_cell_area(const DeformedGrid& grid) {
  return grid.width() * grid.height() / static_cast<double>(grid.cell_count());
}

double loss_laplacian(const DeformedGrid& grid) {
  std::vector<Vec2> scratch(grid.vertex_count());
  double loss = 0.0;
  add_laplacian_gradient(grid, scratch, loss);
  return loss;
}

void project_gradient(const DeformedGrid& grid, std::span<Vec2> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    switch (grid.motion(i)) {
      case VertexMotion::kFree:
        break;
      case VertexMotion::kSlideX:
        grad[i].y = 0.0;
        break;
      case VertexMotion::kSlideY:
        grad[i].x = 0.0;
        break;
      case VertexMotion::kFixed:
        grad[i] = {};
        break;
    }
  }
}

EnergyReport total_energy(const DeformedGrid& grid, const FeatureMap& features,
                          const LossWeights& weights) {
  return evaluate(grid, features, weights, {});
}

EnergyReport energy_with_fixed_means(const DeformedGrid& grid, const FeatureMap& features,
                                     const LossWeights& weights,
                                     std::span<const double> fixed_means) {
  if (fixed_means.empty()) throw InvalidArgument("fixed means must not be empty");
  return evaluate(grid, features, weights, fixed_means);
}

}  // namespace defgrid
