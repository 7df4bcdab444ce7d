#include "defgrid/errors.hpp"
#include "defgrid/optimizer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <random>

namespace defgrid {
namespace {

OptimizerConfig quick(std::size_t iterations) {
  OptimizerConfig c;
  c.iterations = iterations;
  return c;
}

TEST(Deform, ConstantImageKeepsVertices) {
  const auto g = build_uniform_grid(4, 4, 32, 32);
  const auto f = testing::constant_features(32, 32, {0.5, 0.5, 0.5});
  const auto t = deform(g, f, quick(20));
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    EXPECT_LT(norm(t.final_grid.position(i) - g.position(i)), 1e-6);
  }
}

TEST(Deform, ZeroIterationsIsIdentity) {
  std::mt19937_64 rng(79);
  const auto g = testing::random_valid_grid(3, 3, 24, 24, rng);
  const auto f = testing::random_features(24, 24, 3, rng);
  const auto t = deform(g, f, quick(0));
  ASSERT_EQ(t.records.size(), 1u);
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    EXPECT_EQ(t.final_grid.position(i), g.position(i));
  }
  EXPECT_DOUBLE_EQ(t.records[0].l_total, total_energy(g, f, LossWeights{}).l_total);
}

TEST(Deform, SafetyMonotoneAndClampBound) {
  std::mt19937_64 rng(83);
  for (int n = 0; n < 4; ++n) {
    const auto g = build_uniform_grid(4, 4, 32, 32,
                                      n % 2 ? TopologyVariant::kCenterFan
                                            : TopologyVariant::kAlternatingDiagonal);
    const auto f = testing::random_features(32, 32, 3, rng);
    auto cfg = quick(40);
    cfg.step_size = 2.0;  // aggressive, to exercise backtracking
    cfg.flip_guard = n < 2 ? FlipGuard::kBacktrack : FlipGuard::kReject;
    const auto t = deform(g, f, cfg);
    ASSERT_EQ(t.records.size(), 41u);
    EXPECT_GT(min_signed_area(t.final_grid), kAreaFloor);
    for (std::size_t i = 1; i < t.records.size(); ++i) {
      EXPECT_LE(t.records[i].l_total,
                t.records[i - 1].l_total + 1e-9 * std::fabs(t.records[i - 1].l_total));
    }
    EXPECT_LE(t.records.back().l_total, t.records.front().l_total);
    const double bound = cfg.max_offset * g.pitch();
    for (const Vec2 o : t.final_grid.offsets()) {
      EXPECT_LE(std::fabs(o.x), bound + 1e-12);
      EXPECT_LE(std::fabs(o.y), bound + 1e-12);
    }
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
      const Vec2 o = t.final_grid.offset(i);
      switch (g.motion(i)) {
        case VertexMotion::kFixed:
          EXPECT_EQ(o, (Vec2{0, 0}));
          break;
        case VertexMotion::kSlideX:
          EXPECT_EQ(o.y, 0.0);
          break;
        case VertexMotion::kSlideY:
          EXPECT_EQ(o.x, 0.0);
          break;
        case VertexMotion::kFree:
          break;
      }
    }
  }
}

TEST(Deform, EveryIntermediateGridIsSafe) {
  // Runs k iterations for each prefix length; the final grid of each run is
  // the state the longer run passed through.
  std::mt19937_64 rng(89);
  const auto g = build_uniform_grid(3, 3, 24, 24);
  const auto f = testing::random_features(24, 24, 3, rng);
  auto cfg = quick(0);
  cfg.step_size = 3.0;
  const auto full = deform(g, f, [&] { auto c = cfg; c.iterations = 15; return c; }());
  for (std::size_t k = 0; k <= 15; ++k) {
    cfg.iterations = k;
    const auto t = deform(g, f, cfg);
    EXPECT_GT(min_signed_area(t.final_grid), kAreaFloor);
    EXPECT_DOUBLE_EQ(t.records.back().l_total, full.records[k].l_total);
  }
}

TEST(Deform, ObserverSeesEveryIterationGrid) {
  std::mt19937_64 rng(91);
  const auto g = build_uniform_grid(3, 3, 24, 24);
  const auto f = testing::random_features(24, 24, 3, rng);
  auto cfg = quick(12);
  cfg.step_size = 3.0;
  std::vector<IterationRecord> seen;
  std::vector<DeformedGrid> grids;
  const auto t = deform(g, f, cfg, [&](const IterationRecord& r, const DeformedGrid& cur) {
    seen.push_back(r);
    grids.push_back(cur);
  });
  ASSERT_EQ(seen.size(), 12u);
  for (std::size_t k = 1; k <= 12; ++k) {
    EXPECT_EQ(seen[k - 1].iteration, k);
    EXPECT_EQ(seen[k - 1].l_total, t.records[k].l_total);
    EXPECT_EQ(seen[k - 1].accepted, t.records[k].accepted);
    auto prefix = cfg;
    prefix.iterations = k;
    const auto p = deform(g, f, prefix).final_grid;
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
      EXPECT_EQ(grids[k - 1].position(i), p.position(i));
    }
  }
  EXPECT_TRUE(std::ranges::equal(grids.back().positions(), t.final_grid.positions()));
}

TEST(Deform, Deterministic) {
  std::mt19937_64 rng(97);
  const auto g = build_uniform_grid(4, 4, 32, 32);
  const auto f = testing::random_features(32, 32, 3, rng);
  auto cfg = quick(30);
  cfg.seed = 1234;
  const auto a = deform(g, f, cfg);
  const auto b = deform(g, f, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].l_total, b.records[i].l_total);
    EXPECT_EQ(a.records[i].max_displacement, b.records[i].max_displacement);
  }
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    EXPECT_EQ(a.final_grid.position(i), b.final_grid.position(i));
  }
}

TEST(Deform, PullsGridLineOntoToneEdge) {
  FeatureMap f(32, 32, 3, ChannelLayout::kRgb);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const double left = std::clamp(13.5 - static_cast<double>(x), 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c) f.at(x, y, c) = 0.2 * left + 0.8 * (1.0 - left);
    }
  }
  const auto g = build_uniform_grid(4, 4, 32, 32);
  const auto t = deform(g, f, quick(100));
  // Column 2 (x = 16 before deformation) is the lattice line nearest the edge.
  double before = 0.0;
  double after = 0.0;
  for (std::size_t r = 0; r <= 4; ++r) {
    const std::size_t i = g.topology().lattice_index(r, 2);
    before += std::fabs(g.position(i).x - 13.5);
    after += std::fabs(t.final_grid.position(i).x - 13.5);
  }
  EXPECT_LT(after, 0.5 * before);
  EXPECT_LT(t.records.back().l_recons, t.records.front().l_recons);
}

TEST(Deform, RejectsBadInput) {
  const auto g = build_uniform_grid(2, 2, 8, 8);
  const auto f = testing::constant_features(8, 8, {0, 0, 0});
  auto cfg = quick(1);
  cfg.max_offset = 0.5;
  EXPECT_THROW(deform(g, f, cfg), InvalidArgument);
  cfg.max_offset = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = quick(1);
  cfg.step_size = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  auto folded = g;
  folded.set_offset(4, {5, 5});
  EXPECT_THROW(deform(folded, f, quick(1)), InvalidGrid);
}

TEST(Deform, NonFiniteFeaturesRaiseNumericFailure) {
  auto f = testing::constant_features(16, 16, {0.5, 0.5, 0.5});
  f.at(3, 3, 0) = std::nan("");
  try {
    deform(build_uniform_grid(2, 2, 16, 16), f, quick(5));
    FAIL() << "expected NumericFailure";
  } catch (const NumericFailure& e) {
    EXPECT_EQ(e.iteration(), 1u);
  }
}

TEST(ExternalOffsets, ZeroIsIdentity) {
  const auto g = build_uniform_grid(3, 3, 30, 30);
  const auto out = apply_external_offsets(g, std::vector<Vec2>(g.vertex_count()));
  for (std::size_t i = 0; i < g.vertex_count(); ++i) EXPECT_EQ(out.position(i), g.position(i));
}

TEST(ExternalOffsets, ClampedToBound) {
  const auto g = build_uniform_grid(3, 3, 30, 30);
  std::vector<Vec2> off(g.vertex_count(), Vec2{100.0, -100.0});
  const auto out = apply_external_offsets(g, off, 0.4);
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    const Vec2 o = out.offset(i);
    if (g.motion(i) == VertexMotion::kFree) EXPECT_EQ(o, (Vec2{4.0, -4.0}));
    EXPECT_LE(std::fabs(o.x), 4.0);
    EXPECT_LE(std::fabs(o.y), 4.0);
  }
}

TEST(ExternalOffsets, FlipNamesTheCell) {
  // Center-fan 2x2 on 8x8: pitch 4, bound 1.8 px. Quad 0 spans [0,4]^2 with
  // center vertex 9 at (2,2). Pushing the center right to x = 3.8 while the
  // quad's right edge (vertices 1 and 4) moves left to x = 2.2 mirrors the
  // center across that edge.
  const auto g = build_uniform_grid(2, 2, 8, 8, TopologyVariant::kCenterFan);
  std::vector<Vec2> off(g.vertex_count());
  off[9] = {1.8, 0.0};
  off[1] = {-1.8, 0.0};
  off[4] = {-1.8, 0.0};
  std::size_t target = GridTopology::npos;
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    const auto c = g.topology().cell(k);
    const std::set<std::size_t> s(c.begin(), c.end());
    if (s == std::set<std::size_t>{1, 4, 9}) target = k;
  }
  ASSERT_NE(target, GridTopology::npos);
  try {
    apply_external_offsets(g, off);
    FAIL() << "expected FlippedCells";
  } catch (const FlippedCells& e) {
    EXPECT_TRUE(std::find(e.cells().begin(), e.cells().end(), target) != e.cells().end());
    auto probe = g;
    probe.set_offsets(off);
    EXPECT_EQ(e.cells(), cells_at_or_below(probe, kAreaFloor));
    EXPECT_LT(signed_areas(probe)[target], 0.0);
  }
}

TEST(ExternalOffsets, WrongLength) {
  const auto g = build_uniform_grid(2, 2, 8, 8);
  EXPECT_THROW(apply_external_offsets(g, std::vector<Vec2>(3)), DimensionMismatch);
}

TEST(FlipGuard, Parse) {
  EXPECT_EQ(parse_flip_guard("backtrack"), FlipGuard::kBacktrack);
  EXPECT_EQ(parse_flip_guard("reject"), FlipGuard::kReject);
  EXPECT_THROW(parse_flip_guard("ignore"), InvalidArgument);
}

}  // namespace
}  // namespace defgrid
