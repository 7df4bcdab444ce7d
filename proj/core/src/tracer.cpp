#include "defgrid/tracer.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace defgrid {

std::vector<std::uint8_t> boundary_pixels(std::span<const std::uint8_t> mask, std::size_t width,
                                          std::size_t height) {
  if (mask.size() != width * height) throw DimensionMismatch("mask size does not match extent");
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (!mask[y * width + x]) continue;
      const bool touches = (x > 0 && !mask[y * width + x - 1]) ||
                           (x + 1 < width && !mask[y * width + x + 1]) ||
                           (y > 0 && !mask[(y - 1) * width + x]) ||
                           (y + 1 < height && !mask[(y + 1) * width + x]);
      out[y * width + x] = touches ? 1 : 0;
    }
  }
  return out;
}

namespace {

// Lower envelope of parabolas; squared distances along one line.
void squared_edt_1d(std::span<const double> f, std::span<double> d, std::vector<std::size_t>& v,
                    std::vector<double>& z) {
  const std::size_t n = f.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] < kInf) {
      first = q;
      break;
    }
  }
  if (first == n) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    const auto qd = static_cast<double>(q);
    double s = 0.0;
    while (true) {
      const auto vk = static_cast<double>(v[k]);
      s = ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * qd - 2.0 * vk);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const auto qd = static_cast<double>(q);
    while (z[k + 1] < qd) ++k;
    const double diff = qd - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

EnergyMap distance_transform_from_sources(std::span<const std::uint8_t> sources,
                                          std::size_t width, std::size_t height) {
  if (sources.size() != width * height) {
    throw DimensionMismatch("source map size does not match extent");
  }
  if (std::none_of(sources.begin(), sources.end(), [](std::uint8_t s) { return s != 0; })) {
    throw NoBoundary("distance transform needs at least one boundary pixel");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  EnergyMap out{width, height, std::vector<double>(width * height)};
  std::vector<double> column(height);
  std::vector<double> column_out(height);
  std::vector<std::size_t> v;
  std::vector<double> z;
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = sources[y * width + x] ? 0.0 : kInf;
    squared_edt_1d(column, column_out, v, z);
    for (std::size_t y = 0; y < height; ++y) out.values[y * width + x] = column_out[y];
  }
  std::vector<double> row(width);
  std::vector<double> row_out(width);
  for (std::size_t y = 0; y < height; ++y) {
    std::copy_n(out.values.begin() + static_cast<std::ptrdiff_t>(y * width), width, row.begin());
    squared_edt_1d(row, row_out, v, z);
    for (std::size_t x = 0; x < width; ++x) out.values[y * width + x] = std::sqrt(row_out[x]);
  }
  return out;
}

EnergyMap distance_transform(std::span<const std::uint8_t> mask, std::size_t width,
                             std::size_t height) {
  return distance_transform_from_sources(boundary_pixels(mask, width, height), width, height);
}

double sample_bilinear(const EnergyMap& map, Vec2 point) {
  const double max_x = static_cast<double>(map.width - 1);
  const double max_y = static_cast<double>(map.height - 1);
  const double fx = std::clamp(point.x - 0.5, 0.0, max_x);
  const double fy = std::clamp(point.y - 0.5, 0.0, max_y);
  const auto x0 = static_cast<std::size_t>(std::floor(fx));
  const auto y0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t x1 = std::min(x0 + 1, map.width - 1);
  const std::size_t y1 = std::min(y0 + 1, map.height - 1);
  const double tx = fx - static_cast<double>(x0);
  const double ty = fy - static_cast<double>(y0);
  const double top = (1.0 - tx) * map.at(x0, y0) + tx * map.at(x1, y0);
  const double bottom = (1.0 - tx) * map.at(x0, y1) + tx * map.at(x1, y1);
  return (1.0 - ty) * top + ty * bottom;
}

std::vector<double> vertex_energy(const DeformedGrid& grid, const EnergyMap& map) {
  std::vector<double> out(grid.vertex_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sample_bilinear(map, grid.position(i));
  return out;
}

std::vector<double> edge_energy(const DeformedGrid& grid, const EnergyMap& map) {
  const auto edges = grid.topology().edges();
  std::vector<double> out(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Vec2 a = grid.position(edges[e].a);
    const Vec2 b = grid.position(edges[e].b);
    const double len = norm(b - a);
    const auto samples = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(len)) + 1);
    double sum = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(samples - 1);
      sum += sample_bilinear(map, a + t * (b - a));
    }
    out[e] = sum / static_cast<double>(samples);
  }
  return out;
}

std::vector<std::size_t> snap_seeds(const DeformedGrid& grid,
                                    std::span<const double> vertex_energies,
                                    std::span<const Vec2> seeds, std::size_t k) {
  if (k == 0) throw InvalidArgument("snap k must be at least 1");
  if (seeds.empty()) throw DegenerateSeeds("no seed points");
  if (vertex_energies.size() != grid.vertex_count()) {
    throw DimensionMismatch("vertex energies do not match the grid");
  }
  const std::size_t n = grid.vertex_count();
  const std::size_t take = std::min(k, n);
  std::vector<std::size_t> order(n);
  std::vector<double> dist2(n);
  std::vector<std::size_t> out;
  for (const Vec2& seed : seeds) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 d = grid.position(i) - seed;
      dist2[i] = dot(d, d);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto nearer = [&](std::size_t a, std::size_t b) {
      return dist2[a] != dist2[b] ? dist2[a] < dist2[b] : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), nearer);
    std::size_t best = order[0];
    for (std::size_t j = 1; j < take; ++j) {
      const std::size_t c = order[j];
      // Candidates arrive nearest first, so strict < keeps the nearer on ties.
      if (vertex_energies[c] < vertex_energies[best]) best = c;
    }
    if (std::find(out.begin(), out.end(), best) == out.end()) out.push_back(best);
  }
  return out;
}

PathSegment shortest_path(const GridTopology& topology, std::span<const double> edge_energies,
                          std::size_t source, std::size_t target) {
  if (edge_energies.size() != topology.edges().size()) {
    throw DimensionMismatch("edge energies do not match the topology");
  }
  const std::size_t n = topology.vertex_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> parent(n, GridTopology::npos);
  std::vector<bool> done(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == target) break;
    for (const std::size_t v : topology.neighbors(u)) {
      if (done[v]) continue;
      const double w = edge_energies[topology.edge_index(u, v)];
      if (w < 0.0) throw InvalidArgument("edge energies must be non-negative");
      if (d + w < dist[v]) {
        dist[v] = d + w;
        parent[v] = u;
        queue.emplace(dist[v], v);
      }
    }
  }
  if (!done[target]) throw Error("grid graph is disconnected");
  PathSegment seg;
  seg.energy = dist[target];
  for (std::size_t v = target; v != GridTopology::npos; v = parent[v]) seg.vertices.push_back(v);
  std::reverse(seg.vertices.begin(), seg.vertices.end());
  return seg;
}

std::vector<double> TracedPolygon::segment_energies() const {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.energy);
  return out;
}

std::vector<Vec2> polygon_points(const DeformedGrid& grid, std::span<const std::size_t> vertices) {
  std::vector<Vec2> out;
  out.reserve(vertices.size());
  for (const std::size_t v : vertices) out.push_back(grid.position(v));
  return out;
}

TracedPolygon trace_path(const DeformedGrid& grid, std::span<const double> edge_energies,
                         std::span<const std::size_t> snapped) {
  std::vector<std::size_t> seeds;
  for (const std::size_t v : snapped) {
    if (v >= grid.vertex_count()) throw InvalidArgument(fmt::format("vertex {} out of range", v));
    if (std::find(seeds.begin(), seeds.end(), v) == seeds.end()) seeds.push_back(v);
  }
  if (seeds.size() < 3) {
    throw DegenerateSeeds(
        fmt::format("tracing needs 3 distinct snapped vertices, got {}", seeds.size()));
  }
  TracedPolygon poly;
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    PathSegment seg =
        shortest_path(grid.topology(), edge_energies, seeds[j], seeds[(j + 1) % seeds.size()]);
    poly.energy += seg.energy;
    for (std::size_t s = 0; s + 1 < seg.vertices.size(); ++s) {
      if (poly.vertices.empty() || poly.vertices.back() != seg.vertices[s]) {
        poly.vertices.push_back(seg.vertices[s]);
      }
    }
    poly.segments.push_back(std::move(seg));
  }
  while (poly.vertices.size() > 1 && poly.vertices.back() == poly.vertices.front()) {
    poly.vertices.pop_back();
  }
  poly.width = static_cast<std::size_t>(std::lround(grid.width()));
  poly.height = static_cast<std::size_t>(std::lround(grid.height()));
  poly.mask = rasterize_polygon(polygon_points(grid, poly.vertices), poly.width, poly.height);
  return poly;
}

std::vector<std::uint8_t> rasterize_polygon(std::span<const Vec2> polygon, std::size_t width,
                                            std::size_t height) {
  std::vector<std::uint8_t> out(width * height, 0);
  if (polygon.size() < 3) return out;
  std::vector<double> crossings;
  for (std::size_t y = 0; y < height; ++y) {
    const double yc = static_cast<double>(y) + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < polygon.size(); ++i) {
      const Vec2 a = polygon[i];
      const Vec2 b = polygon[(i + 1) % polygon.size()];
      // Half-open in y so shared vertices count once.
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
        crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t x = 0; x < width; ++x) {
      const double xc = static_cast<double>(x) + 0.5;
      const auto left = std::lower_bound(crossings.begin(), crossings.end(), xc) - crossings.begin();
      out[y * width + x] = (left % 2 == 1) ? 1 : 0;
    }
  }
  return out;
}

namespace {

// Clockwise on screen (y down), starting west.
constexpr std::array<std::array<int, 2>, 8> kMoore = {{
    {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1},
}};

int direction_of(long dx, long dy) {
  for (int d = 0; d < 8; ++d) {
    if (kMoore[d][0] == dx && kMoore[d][1] == dy) return d;
  }
  return -1;
}

}  // namespace

std::vector<Vec2> outer_contour(std::span<const std::uint8_t> mask, std::size_t width,
                                std::size_t height) {
  if (mask.size() != width * height) throw DimensionMismatch("mask size does not match extent");
  // 8-connected components, labeled in raster order of their first pixel.
  std::vector<int> comp(mask.size(), -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> firsts;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || comp[i] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    firsts.push_back(i);
    comp[i] = id;
    stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++sizes.back();
      const auto px = static_cast<long>(p % width);
      const auto py = static_cast<long>(p / width);
      for (const auto& d : kMoore) {
        const long nx = px + d[0];
        const long ny = py + d[1];
        if (nx < 0 || ny < 0 || nx >= static_cast<long>(width) || ny >= static_cast<long>(height)) {
          continue;
        }
        const auto q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
        if (mask[q] && comp[q] < 0) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  if (sizes.empty()) throw NoBoundary("mask has no foreground");
  const auto largest = static_cast<int>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  const auto in_comp = [&](long x, long y) {
    if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) {
      return false;
    }
    return comp[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] == largest;
  };

  const std::size_t start = firsts[static_cast<std::size_t>(largest)];
  const auto sx = static_cast<long>(start % width);
  const auto sy = static_cast<long>(start / width);
  const auto center = [](long x, long y) {
    return Vec2{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
  };

  std::vector<Vec2> contour{center(sx, sy)};
  long cx = sx;
  long cy = sy;
  int backtrack = 0;  // entered from the west
  long first_x = -1;
  long first_y = -1;
  const std::size_t limit = 4 * mask.size() + 8;
  for (std::size_t step = 0; step < limit; ++step) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (backtrack + k) % 8;
      if (in_comp(cx + kMoore[d][0], cy + kMoore[d][1])) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const long nx = cx + kMoore[found][0];
    const long ny = cy + kMoore[found][1];
    if (cx == sx && cy == sy) {
      if (first_x < 0) {
        first_x = nx;
        first_y = ny;
      } else if (nx == first_x && ny == first_y) {
        break;
      }
    }
    // The last background cell examined becomes the new backtrack.
    const int prev = (found + 7) % 8;
    const long bx = cx + kMoore[prev][0];
    const long by = cy + kMoore[prev][1];
    cx = nx;
    cy = ny;
    backtrack = direction_of(bx - cx, by - cy);
    if (!(cx == sx && cy == sy)) contour.push_back(center(cx, cy));
  }
  return contour;
}

std::vector<Vec2> sample_seed_points(std::span<const std::uint8_t> mask, std::size_t width,
                                     std::size_t height, std::size_t count) {
  if (count == 0) throw InvalidArgument("seed count must be at least 1");
  const auto boundary = boundary_pixels(mask, width, height);
  if (std::none_of(boundary.begin(), boundary.end(), [](std::uint8_t b) { return b != 0; })) {
    throw NoBoundary("mask has no boundary");
  }
  const std::vector<Vec2> contour = outer_contour(mask, width, height);
  const std::size_t m = contour.size();
  std::vector<double> cumulative(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    cumulative[i + 1] = cumulative[i] + norm(contour[(i + 1) % m] - contour[i]);
  }
  const double total = cumulative[m];
  std::vector<Vec2> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(count);
    while (seg + 1 < m && cumulative[seg + 1] <= s) ++seg;
    const double len = cumulative[seg + 1] - cumulative[seg];
    const double t = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
    const Vec2 a = contour[seg];
    const Vec2 b = contour[(seg + 1) % m];
    out.push_back(a + t * (b - a));
  }
  return out;
}

}  // namespace defgrid
