#include "defgrid/partition.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace defgrid {

std::string_view to_string(AffinityAveraging averaging) {
  return averaging == AffinityAveraging::kArithmetic ? "arithmetic" : "pixel-weighted";
}

AffinityAveraging parse_affinity_averaging(std::string_view name) {
  if (name == "arithmetic") return AffinityAveraging::kArithmetic;
  if (name == "pixel-weighted") return AffinityAveraging::kPixelWeighted;
  throw InvalidArgument(fmt::format("unknown affinity averaging '{}'", name));
}

double AffinityGraph::affinity(std::size_t u, std::size_t v) const {
  const auto it = adjacency[u].find(v);
  return it == adjacency[u].end() ? 0.0 : it->second;
}

std::size_t SegmentationMap::segment_count() const {
  if (ids.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(ids.begin(), ids.end())) + 1;
}

AffinityGraph build_affinity(const DeformedGrid& grid, const CellStats& stats, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("affinity sigma must be positive");
  const std::size_t k_count = grid.cell_count();
  if (stats.mass.size() != k_count) throw DimensionMismatch("cell stats do not match the grid");
  if (stats.channels < 3) throw InvalidArgument("affinity needs at least three channels");
  AffinityGraph g;
  g.nodes.resize(k_count);
  g.adjacency.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    auto& node = g.nodes[k];
    node.cells = {k};
    node.pixel_count = stats.hard_count[k];
    const auto mean = stats.hard_count[k] > 0 ? stats.hard_mean_of(k) : stats.soft_mean_of(k);
    std::copy_n(mean.begin(), 3, node.mean_rgb.begin());
    g.pixel_total += node.pixel_count;
  }
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (const auto& [j, k] : grid.topology().cell_adjacency()) {
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = g.nodes[j].mean_rgb[c] - g.nodes[k].mean_rgb[c];
      d2 += d * d;
    }
    const double w = std::exp(-d2 * inv_s2);
    g.adjacency[j][k] = w;
    g.adjacency[k][j] = w;
  }
  return g;
}

void AgglomerateOptions::validate() const {
  if (target < 1) throw InvalidArgument("target cluster count must be at least 1");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
    throw InvalidArgument(fmt::format("affinity threshold {} outside [0, 1]", *threshold));
  }
}

std::vector<ClusterBoundary> cluster_boundaries(const DeformedGrid& grid,
                                                const std::vector<std::size_t>& cell_cluster,
                                                std::size_t cluster_count) {
  const GridTopology& topo = grid.topology();
  // Directed boundary edges per cluster, keyed by tail vertex.
  std::vector<std::multimap<std::size_t, std::size_t>> outgoing(cluster_count);
  for (std::size_t k = 0; k < topo.cell_count(); ++k) {
    const auto& c = topo.cell(k);
    const std::size_t id = cell_cluster[k];
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = c[e];
      const std::size_t b = c[(e + 1) % 3];
      bool shared = false;
      for (const std::size_t other : topo.edge_cells(topo.edge_index(a, b))) {
        if (other != k && cell_cluster[other] == id) shared = true;
      }
      if (!shared) outgoing[id].emplace(a, b);
    }
  }
  std::vector<ClusterBoundary> out(cluster_count);
  for (std::size_t id = 0; id < cluster_count; ++id) {
    auto& edges = outgoing[id];
    while (!edges.empty()) {
      std::vector<std::size_t> loop;
      const std::size_t start = edges.begin()->first;
      std::size_t v = start;
      do {
        const auto it = edges.find(v);
        if (it == edges.end()) throw Error("cluster boundary is not closed");
        loop.push_back(v);
        v = it->second;
        edges.erase(it);
      } while (v != start);
      double area2 = 0.0;
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 p = grid.position(loop[i]);
        const Vec2 q = grid.position(loop[(i + 1) % loop.size()]);
        area2 += p.x * q.y - q.x * p.y;
      }
      out[id].loops.push_back(std::move(loop));
      out[id].signed_area.push_back(0.5 * area2);
    }
  }
  return out;
}

PartitionResult agglomerate(const DeformedGrid& grid, AffinityGraph graph,
                            const AgglomerateOptions& options, std::size_t width,
                            std::size_t height) {
  options.validate();
  const std::size_t k_count = graph.node_count();
  if (k_count != grid.cell_count()) throw DimensionMismatch("affinity graph does not match grid");

  PartitionResult result;
  std::size_t target = options.target;
  if (target > k_count) {
    result.target_exceeded = true;
    target = k_count;
  }

  // Ordered by (-affinity, u, v): begin() is the best pair.
  using Key = std::tuple<double, std::size_t, std::size_t>;
  std::set<Key> queue;
  for (std::size_t u = 0; u < k_count; ++u) {
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (u < v) queue.emplace(-w, u, v);
    }
  }
  std::vector<bool> alive(k_count, true);
  std::size_t live = k_count;
  auto& adj = graph.adjacency;
  auto& nodes = graph.nodes;

  while (live > target && !queue.empty()) {
    const auto [neg_w, u, v] = *queue.begin();
    if (options.threshold && -neg_w < *options.threshold) break;
    queue.erase(queue.begin());

    const double pu = static_cast<double>(nodes[u].pixel_count);
    const double pv = static_cast<double>(nodes[v].pixel_count);
    const auto average = [&](double wu, double wv) {
      if (options.averaging == AffinityAveraging::kPixelWeighted && pu + pv > 0.0) {
        return (pu * wu + pv * wv) / (pu + pv);
      }
      return 0.5 * (wu + wv);
    };

    adj[u].erase(v);
    adj[v].erase(u);
    for (const auto& [n, wv] : adj[v]) {
      queue.erase(Key{-wv, std::min(v, n), std::max(v, n)});
      adj[n].erase(v);
      const auto it = adj[u].find(n);
      double w = wv;
      if (it != adj[u].end()) {
        queue.erase(Key{-it->second, std::min(u, n), std::max(u, n)});
        w = average(it->second, wv);
      }
      adj[u][n] = w;
      adj[n][u] = w;
      queue.emplace(-w, std::min(u, n), std::max(u, n));
    }
    adj[v].clear();

    auto& nu = nodes[u];
    auto& nv = nodes[v];
    if (pu + pv > 0.0) {
      for (int c = 0; c < 3; ++c) nu.mean_rgb[c] = (pu * nu.mean_rgb[c] + pv * nv.mean_rgb[c]) / (pu + pv);
    }
    nu.pixel_count += nv.pixel_count;
    std::vector<std::size_t> merged;
    std::merge(nu.cells.begin(), nu.cells.end(), nv.cells.begin(), nv.cells.end(),
               std::back_inserter(merged));
    nu.cells = std::move(merged);
    nv = ClusterNode{};
    alive[v] = false;
    --live;
    ++result.merges;
  }

  // Dense ids in ascending order of the surviving (smallest) member cell.
  std::vector<std::size_t> dense(k_count, GridTopology::npos);
  AffinityGraph final_graph;
  final_graph.pixel_total = graph.pixel_total;
  for (std::size_t u = 0; u < k_count; ++u) {
    if (!alive[u]) continue;
    dense[u] = final_graph.nodes.size();
    final_graph.nodes.push_back(std::move(nodes[u]));
  }
  final_graph.adjacency.resize(final_graph.nodes.size());
  for (std::size_t u = 0; u < k_count; ++u) {
    if (!alive[u]) continue;
    for (const auto& [n, w] : adj[u]) final_graph.adjacency[dense[u]][dense[n]] = w;
  }
  result.cluster_count = final_graph.nodes.size();
  result.cell_cluster.assign(k_count, 0);
  for (std::size_t id = 0; id < final_graph.nodes.size(); ++id) {
    for (const std::size_t k : final_graph.nodes[id].cells) result.cell_cluster[k] = id;
  }
  result.graph = std::move(final_graph);

  const auto cells = rasterize_cells(grid, width, height);
  result.segmentation.width = width;
  result.segmentation.height = height;
  result.segmentation.ids.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.segmentation.ids[i] = static_cast<int>(result.cell_cluster[cells[i]]);
  }
  result.boundaries = cluster_boundaries(grid, result.cell_cluster, result.cluster_count);
  return result;
}

}  // namespace defgrid
