#include "defgrid/errors.hpp"
#include "defgrid/geometry.hpp"
#include "defgrid/grid.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace defgrid {
namespace {

// Shoelace over raw coordinates, kept separate from signed_area.
double shoelace(Vec2 a, Vec2 b, Vec2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

TEST(UniformGrid, SmallestGrid) {
  const auto g = build_uniform_grid(1, 1, 10, 10);
  EXPECT_EQ(g.vertex_count(), 4u);
  EXPECT_EQ(g.cell_count(), 2u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g.offset(i), (Vec2{0, 0}));
  }
  EXPECT_EQ(g.position(0), (Vec2{0, 0}));
  EXPECT_EQ(g.position(3), (Vec2{10, 10}));
}

TEST(UniformGrid, CenterVertexOfTwoByTwo) {
  const auto g = build_uniform_grid(2, 2, 8, 8);
  EXPECT_EQ(g.vertex_count(), 9u);
  EXPECT_EQ(g.position(4), (Vec2{4, 4}));
}

TEST(UniformGrid, TwentyByTwentyAreas) {
  const auto g = build_uniform_grid(20, 20, 224, 224);
  EXPECT_EQ(g.vertex_count(), 441u);
  EXPECT_EQ(g.cell_count(), 800u);
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    const auto& c = g.topology().cell(k);
    EXPECT_NEAR(shoelace(g.position(c[0]), g.position(c[1]), g.position(c[2])), 62.72, 1e-9);
  }
}

TEST(UniformGrid, LatticePositions) {
  const auto g = build_uniform_grid(3, 5, 50, 30);
  for (std::size_t r = 0; r <= 3; ++r) {
    for (std::size_t c = 0; c <= 5; ++c) {
      const Vec2 p = g.position(g.topology().lattice_index(r, c));
      EXPECT_DOUBLE_EQ(p.x, static_cast<double>(c) * 50.0 / 5.0);
      EXPECT_DOUBLE_EQ(p.y, static_cast<double>(r) * 30.0 / 3.0);
    }
  }
}

TEST(UniformGrid, RejectsBadArguments) {
  EXPECT_THROW(build_uniform_grid(0, 3, 10, 10), InvalidArgument);
  EXPECT_THROW(build_uniform_grid(3, 0, 10, 10), InvalidArgument);
  EXPECT_THROW(build_uniform_grid(3, 3, 0, 10), InvalidArgument);
  EXPECT_THROW(build_uniform_grid(3, 3, 10, -1), InvalidArgument);
}

TEST(Topology, CellInvariantsBothVariants) {
  for (const auto variant : {TopologyVariant::kAlternatingDiagonal, TopologyVariant::kCenterFan}) {
    const GridTopology t(4, 3, variant);
    const std::size_t per_quad = variant == TopologyVariant::kCenterFan ? 4 : 2;
    EXPECT_EQ(t.cell_count(), 4u * 3u * per_quad);
    EXPECT_EQ(t.triangles_per_quad(), per_quad);
    for (const auto& c : t.cells()) {
      EXPECT_NE(c[0], c[1]);
      EXPECT_NE(c[1], c[2]);
      EXPECT_NE(c[0], c[2]);
      for (const auto v : c) EXPECT_LT(v, t.vertex_count());
    }
  }
}

TEST(Topology, AdjacencySymmetric) {
  const GridTopology t(3, 4, TopologyVariant::kCenterFan);
  for (std::size_t i = 0; i < t.vertex_count(); ++i) {
    for (const auto j : t.neighbors(i)) {
      const auto nj = t.neighbors(j);
      EXPECT_TRUE(std::find(nj.begin(), nj.end(), i) != nj.end()) << i << " " << j;
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [a, b] : t.cell_adjacency()) {
    EXPECT_LT(a, b);
    pairs.insert({a, b});
  }
  EXPECT_EQ(pairs.size(), t.cell_adjacency().size());
  // Brute force: cells sharing two vertices.
  std::size_t expected = 0;
  for (std::size_t j = 0; j < t.cell_count(); ++j) {
    for (std::size_t k = j + 1; k < t.cell_count(); ++k) {
      int shared = 0;
      for (const auto u : t.cell(j)) {
        for (const auto v : t.cell(k)) shared += u == v;
      }
      if (shared == 2) {
        ++expected;
        EXPECT_TRUE(pairs.count({j, k}));
      }
    }
  }
  EXPECT_EQ(expected, pairs.size());
}

TEST(Topology, EdgesAndEdgeCells) {
  const GridTopology t(2, 2, TopologyVariant::kAlternatingDiagonal);
  // 12 lattice edges + 4 diagonals.
  EXPECT_EQ(t.edges().size(), 16u);
  for (std::size_t e = 0; e < t.edges().size(); ++e) {
    const auto [a, b] = t.edges()[e];
    EXPECT_LT(a, b);
    EXPECT_EQ(t.edge_index(a, b), e);
    EXPECT_EQ(t.edge_index(b, a), e);
    const auto cells = t.edge_cells(e);
    EXPECT_TRUE(cells.size() == 1 || cells.size() == 2);
  }
  EXPECT_EQ(t.edge_index(0, 8), GridTopology::npos);
}

TEST(Topology, ConstructionWindingPositive) {
  for (const auto variant : {TopologyVariant::kAlternatingDiagonal, TopologyVariant::kCenterFan}) {
    const auto g = build_uniform_grid(3, 4, 40, 30, variant);
    for (const double a : signed_areas(g)) EXPECT_GT(a, 0.0);
  }
}

TEST(Barycentric, Examples) {
  const Triangle tri{Vec2{0, 0}, Vec2{4, 0}, Vec2{0, 4}};
  const auto centroid = barycentric({4.0 / 3.0, 4.0 / 3.0}, tri);
  EXPECT_NEAR(centroid.w_a, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(centroid.w_b, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(centroid.w_c, 1.0 / 3.0, 1e-12);
  const auto at_a = barycentric({0, 0}, tri);
  EXPECT_NEAR(at_a.w_a, 1.0, 1e-12);
  EXPECT_NEAR(at_a.w_b, 0.0, 1e-12);
  const auto p = barycentric({1, 1}, tri);
  EXPECT_NEAR(p.w_a, 0.5, 1e-12);
  EXPECT_NEAR(p.w_b, 0.25, 1e-12);
  EXPECT_NEAR(p.w_c, 0.25, 1e-12);
  EXPECT_TRUE(p.inside());
  EXPECT_FALSE(barycentric({3, 3}, tri).inside());
}

TEST(Barycentric, DegenerateCarriesCell) {
  const Triangle flat{Vec2{0, 0}, Vec2{1, 1}, Vec2{2, 2}};
  try {
    barycentric({0.5, 0.5}, flat, 17);
    FAIL() << "expected DegenerateCell";
  } catch (const DegenerateCell& e) {
    EXPECT_EQ(e.cell(), 17u);
  }
}

TEST(Barycentric, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  int checked = 0;
  while (checked < 500) {
    const Triangle t{Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}};
    if (std::fabs(shoelace(t[0], t[1], t[2])) < 1.0) continue;
    const Vec2 p{u(rng), u(rng)};
    const auto w = barycentric(p, t);
    EXPECT_NEAR(w.w_a + w.w_b + w.w_c, 1.0, 1e-9);
    const Vec2 back = w.w_a * t[0] + w.w_b * t[1] + w.w_c * t[2];
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
    ++checked;
  }
}

// Minimum over dense samples of the segment, measured in L1 to the
// Euclidean-closest sample.
double dense_segment_l1(Vec2 p, Vec2 a, Vec2 b) {
  double best_e = INFINITY;
  double best_l1 = 0.0;
  for (int s = 0; s <= 200000; ++s) {
    const double t = s / 200000.0;
    const Vec2 q = a + t * (b - a);
    const double e = std::hypot(p.x - q.x, p.y - q.y);
    if (e < best_e) {
      best_e = e;
      best_l1 = std::fabs(p.x - q.x) + std::fabs(p.y - q.y);
    }
  }
  return best_l1;
}

TEST(SegmentDistance, Examples) {
  EXPECT_DOUBLE_EQ(segment_l1_distance({0.5, 0}, {-1, 0}, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(segment_l1_distance({0, 2}, {-1, 0}, {1, 0}), 2.0);
  EXPECT_DOUBLE_EQ(segment_l1_distance({3, 1}, {0, 0}, {1, 0}), 3.0);
  EXPECT_NEAR(segment_l1_distance({3, 1}, {0, 0}, {1, 0}), dense_segment_l1({3, 1}, {0, 0}, {1, 0}),
              1e-4);
  // Zero-length segment behaves like a point.
  EXPECT_DOUBLE_EQ(segment_l1_distance({1, 2}, {4, 6}, {4, 6}), 7.0);
}

TEST(SegmentDistance, MatchesDenseSampling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int n = 0; n < 40; ++n) {
    const Vec2 p{u(rng), u(rng)};
    const Vec2 a{u(rng), u(rng)};
    const Vec2 b{u(rng), u(rng)};
    const double d = segment_l1_distance(p, a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, dense_segment_l1(p, a, b), 2e-3);
  }
}

TEST(SignedAreas, Examples) {
  const auto g = build_uniform_grid(1, 1, 10, 10);
  for (const double a : signed_areas(g)) EXPECT_DOUBLE_EQ(a, 50.0);

  // Mirror the interior vertex of a 2x2 grid across the edge opposite it
  // in one incident cell.
  auto h = build_uniform_grid(2, 2, 8, 8);
  h.set_offset(4, {5.0, 5.0});  // (4,4) -> (9,9) beyond the far corner
  const auto areas = signed_areas(h);
  EXPECT_TRUE(std::any_of(areas.begin(), areas.end(), [](double a) { return a < 0.0; }));
  EXPECT_LT(min_signed_area(h), 0.0);
}

TEST(SignedAreas, TessellationProperty) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 30; ++n) {
    const auto variant = n % 2 ? TopologyVariant::kCenterFan : TopologyVariant::kAlternatingDiagonal;
    const std::size_t rows = 2 + n % 5;
    const std::size_t cols = 3 + n % 4;
    const double w = 20.0 + n;
    const double h = 17.0 + 2 * n;
    const auto g = testing::random_valid_grid(rows, cols, w, h, rng, 0.4, variant);
    double sum = 0.0;
    for (const double a : signed_areas(g)) {
      EXPECT_GT(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, w * h, 1e-6 * w * h);
  }
}

TEST(PointLocation, EveryPixelInLowestContainingCell) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 6; ++n) {
    const auto variant = n % 2 ? TopologyVariant::kCenterFan : TopologyVariant::kAlternatingDiagonal;
    const auto g = testing::random_valid_grid(4, 5, 30, 24, rng, 0.4, variant);
    const auto labels = rasterize_cells(g, 30, 24);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const Vec2 p{static_cast<double>(i % 30) + 0.5, static_cast<double>(i / 30) + 0.5};
      std::size_t lowest = GridTopology::npos;
      for (std::size_t k = 0; k < g.cell_count(); ++k) {
        if (barycentric(p, g.triangle(k)).inside()) {
          lowest = k;
          break;
        }
      }
      ASSERT_NE(lowest, GridTopology::npos) << "pixel " << i << " not covered";
      EXPECT_EQ(labels[i], lowest);
    }
  }
}

TEST(PointLocation, SharedEdgeTieGoesToLowerCell) {
  const auto g = build_uniform_grid(1, 1, 4, 4);
  // (2,2) lies on the diagonal shared by both cells.
  EXPECT_EQ(locate_cell(g, {2.0, 2.0}), 0u);
}

TEST(DeformedGrid, BorderConstraints) {
  const auto g = build_uniform_grid(3, 3, 30, 30);
  const auto& t = g.topology();
  EXPECT_EQ(g.motion(t.lattice_index(0, 0)), VertexMotion::kFixed);
  EXPECT_EQ(g.motion(t.lattice_index(3, 3)), VertexMotion::kFixed);
  EXPECT_EQ(g.motion(t.lattice_index(0, 1)), VertexMotion::kSlideX);
  EXPECT_EQ(g.motion(t.lattice_index(2, 0)), VertexMotion::kSlideY);
  EXPECT_EQ(g.motion(t.lattice_index(1, 1)), VertexMotion::kFree);

  EXPECT_EQ(g.constrain_offset(t.lattice_index(0, 0), {2, 2}, 5), (Vec2{0, 0}));
  EXPECT_EQ(g.constrain_offset(t.lattice_index(0, 1), {2, 2}, 5), (Vec2{2, 0}));
  EXPECT_EQ(g.constrain_offset(t.lattice_index(1, 0), {2, 2}, 5), (Vec2{0, 2}));
  EXPECT_EQ(g.constrain_offset(t.lattice_index(1, 1), {9, -9}, 4), (Vec2{4, -4}));
}

TEST(DeformedGrid, SetPositionsIsVerbatim) {
  auto g = build_uniform_grid(2, 2, 10, 10);
  std::vector<Vec2> pos(g.positions().begin(), g.positions().end());
  pos[4] = {5.123456789012345, 4.987654321098765};
  g.set_positions(pos);
  EXPECT_EQ(g.position(4), pos[4]);
  EXPECT_NEAR(g.offset(4).x, 0.123456789012345, 1e-15);
  EXPECT_THROW(g.set_positions(std::vector<Vec2>(3)), DimensionMismatch);
}

TEST(DeformedGrid, CellsAtOrBelowReportsFolds) {
  auto g = build_uniform_grid(2, 2, 8, 8);
  EXPECT_TRUE(cells_at_or_below(g, 1e-3).empty());
  g.set_offset(4, {5.0, 5.0});
  const auto bad = cells_at_or_below(g, 1e-3);
  ASSERT_FALSE(bad.empty());
  const auto areas = signed_areas(g);
  for (const auto k : bad) EXPECT_LE(areas[k], 1e-3);
}

TEST(Variants, ParseRoundTrip) {
  EXPECT_EQ(parse_topology_variant("alternating"), TopologyVariant::kAlternatingDiagonal);
  EXPECT_EQ(parse_topology_variant("center-fan"), TopologyVariant::kCenterFan);
  EXPECT_EQ(to_string(TopologyVariant::kCenterFan), "center-fan");
  EXPECT_THROW(parse_topology_variant("hex"), InvalidArgument);
}

}  // namespace
}  // namespace defgrid
