#include "defgrid/errors.hpp"
#include "defgrid/optimizer.hpp"
#include "defgrid/pooling.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace defgrid {
namespace {

TEST(GridPool, ConstantImageBothModes) {
  std::mt19937_64 rng(101);
  const auto g = testing::random_valid_grid(4, 4, 32, 32, rng);
  const auto f = testing::constant_features(32, 32, {0.1, 0.2, 0.3});
  for (const auto mode : {PoolMode::kMean, PoolMode::kMax}) {
    const auto cells = grid_pool(g, f, mode);
    ASSERT_EQ(cells.cell_count(), g.cell_count());
    for (std::size_t k = 0; k < cells.cell_count(); ++k) {
      EXPECT_NEAR(cells.value(k)[0], 0.1, 1e-12);
      EXPECT_NEAR(cells.value(k)[2], 0.3, 1e-12);
    }
  }
}

TEST(GridPool, CellOfEqualValuesPoolsExactly) {
  // Values like 0.1 are not dyadic; summing then dividing would drift.
  std::mt19937_64 rng(29);
  const auto g = testing::random_valid_grid(3, 4, 29, 23, rng);
  FeatureMap f(29, 23, 2, ChannelLayout::kGeneric);
  const auto cells = rasterize_cells(g, 29, 23);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    f.pixel(i)[0] = 0.1 * static_cast<double>(cells[i] + 1);
    f.pixel(i)[1] = 1.0 / 3.0;
  }
  const auto pooled = grid_pool(g, f, PoolMode::kMean);
  const auto pasted = paste_back(g, pooled, 29, 23);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    ASSERT_EQ(pasted.pixel(i)[0], f.pixel(i)[0]);
    ASSERT_EQ(pasted.pixel(i)[1], 1.0 / 3.0);
  }
}

TEST(GridPool, MaxDominatesMean) {
  std::mt19937_64 rng(103);
  const auto g = testing::random_valid_grid(5, 5, 40, 40, rng, 0.4);
  const auto f = testing::random_features(40, 40, 3, rng);
  const auto mean = grid_pool(g, f, PoolMode::kMean);
  const auto max = grid_pool(g, f, PoolMode::kMax);
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_GE(max.value(k)[c], mean.value(k)[c]);
  }
}

TEST(GridPool, MatchesPixelSetOracle) {
  std::mt19937_64 rng(107);
  const auto g = testing::random_valid_grid(3, 4, 30, 24, rng, 0.4);
  const auto f = testing::random_features(30, 24, 2, rng);
  const auto mean = grid_pool(g, f, PoolMode::kMean);
  const auto max = grid_pool(g, f, PoolMode::kMax);
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    double sum[2] = {0, 0};
    double mx[2] = {-1, -1};
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.pixel_count(); ++i) {
      if (locate_cell(g, pixel_center(i, 30)) != k) continue;
      ++n;
      for (int c = 0; c < 2; ++c) {
        sum[c] += f.pixel(i)[c];
        mx[c] = std::max(mx[c], f.pixel(i)[c]);
      }
    }
    EXPECT_EQ(mean.empty[k], n == 0);
    if (n == 0) continue;
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(mean.value(k)[c], sum[c] / n, 1e-12);
      EXPECT_EQ(max.value(k)[c], mx[c]);
    }
  }
}

TEST(GridPool, TwoToneGridAligned) {
  const auto g = build_uniform_grid(2, 2, 8, 8);
  FeatureMap f(8, 8, 1);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) f.at(x, y, 0) = y < 4 ? 0.25 : 1.0;
  }
  const auto cells = grid_pool(g, f, PoolMode::kMean);
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    const double expected = g.topology().quad_of_cell(k) < 2 ? 0.25 : 1.0;
    EXPECT_EQ(cells.value(k)[0], expected);
  }
  const auto back = paste_back(g, cells, 8, 8);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(back.pixel(i)[0], f.pixel(i)[0]);
}

TEST(PasteBack, EqualValuesGiveConstantImage) {
  std::mt19937_64 rng(109);
  const auto g = testing::random_valid_grid(3, 3, 24, 24, rng);
  CellFeatureGrid cells{g.topology_ptr(), 2, PoolMode::kMean,
                        std::vector<double>(g.cell_count() * 2, 0.0),
                        std::vector<bool>(g.cell_count(), false)};
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    cells.values[2 * k] = 0.7;
    cells.values[2 * k + 1] = 0.1;
  }
  const auto img = paste_back(g, cells, 24, 24);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    EXPECT_EQ(img.pixel(i)[0], 0.7);
    EXPECT_EQ(img.pixel(i)[1], 0.1);
  }
}

TEST(PasteBack, PoolAfterPasteIsIdempotent) {
  std::mt19937_64 rng(113);
  for (int n = 0; n < 6; ++n) {
    const auto g = testing::random_valid_grid(4, 3, 36, 32, rng, 0.4,
                                              n % 2 ? TopologyVariant::kCenterFan
                                                    : TopologyVariant::kAlternatingDiagonal);
    const auto f = testing::random_features(36, 32, 3, rng);
    const auto pooled = grid_pool(g, f, PoolMode::kMean);
    const auto repooled = grid_pool(g, paste_back(g, pooled, 36, 32), PoolMode::kMean);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      if (pooled.empty[k]) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(repooled.value(k)[c], pooled.value(k)[c], 1e-9);
      }
    }
    // Random cell values: paste then pool returns them.
    CellFeatureGrid random = pooled;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : random.values) v = u(rng);
    const auto back = grid_pool(g, paste_back(g, random, 36, 32), PoolMode::kMean);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      if (back.empty[k]) continue;
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(back.value(k)[c], random.value(k)[c], 1e-9);
    }
  }
}

TEST(PasteBack, RejectsMismatchedValues) {
  const auto g = build_uniform_grid(2, 2, 8, 8);
  CellFeatureGrid cells{g.topology_ptr(), 1, PoolMode::kMean, std::vector<double>(3, 0.0),
                        std::vector<bool>(3, false)};
  EXPECT_THROW(paste_back(g, cells, 8, 8), DimensionMismatch);
  EXPECT_THROW(grid_pool(g, testing::constant_features(9, 8, {0, 0, 0}), PoolMode::kMean),
               DimensionMismatch);
}

TEST(GridPool, EmptyCellsFilledFromNearestCentroid) {
  // A sliver cell too thin to hold any pixel center.
  auto g = build_uniform_grid(2, 2, 8, 8);
  std::vector<Vec2> pos(g.positions().begin(), g.positions().end());
  pos[4] = {4.0, 0.3};
  g.set_positions(pos);
  const auto f = testing::constant_features(8, 8, {0.5, 0.5, 0.5});
  const auto cells = grid_pool(g, f, PoolMode::kMean);
  bool any_empty = false;
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    if (cells.empty[k]) {
      any_empty = true;
      EXPECT_EQ(cells.value(k)[0], 0.5);
    }
  }
  EXPECT_TRUE(any_empty);
}

std::vector<int> disk_mask(std::size_t w, std::size_t h, double cx, double cy, double r) {
  std::vector<int> m(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      m[y * w + x] = std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r ? 1 : 0;
    }
  }
  return m;
}

double iou(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] != 0) && (b[i] != 0);
    uni += (a[i] != 0) || (b[i] != 0);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TEST(LabelCells, AllForeground) {
  std::mt19937_64 rng(127);
  const auto g = testing::random_valid_grid(3, 3, 24, 24, rng);
  const auto labels = label_cells(g, std::vector<int>(24 * 24, 1), 24, 24);
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    if (!labels.empty[k]) EXPECT_EQ(labels.label[k], 1);
  }
}

TEST(LabelCells, UnionOfCellsIsReproduced) {
  std::mt19937_64 rng(131);
  const auto g = testing::random_valid_grid(4, 4, 32, 32, rng, 0.4);
  const auto hard = rasterize_cells(g, 32, 32);
  std::vector<int> mask(hard.size());
  for (std::size_t i = 0; i < hard.size(); ++i) mask[i] = hard[i] % 3 == 0 ? 2 : 0;
  const auto labels = label_cells(g, mask, 32, 32);
  EXPECT_EQ(rasterize_cell_labels(g, labels, 32, 32), mask);
  EXPECT_DOUBLE_EQ(iou(rasterize_cell_labels(g, labels, 32, 32), mask), 1.0);
}

TEST(LabelCells, TieGoesToBackground) {
  // Every other pixel of cell 0 is foreground: an exact 50/50 split.
  const auto g = build_uniform_grid(1, 1, 4, 4);
  const auto hard = rasterize_cells(g, 4, 4);
  std::vector<int> mask(16, 0);
  std::size_t seen = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    if (hard[i] == 0 && seen++ % 2 == 0) mask[i] = 1;
  }
  std::size_t count0 = 0;
  for (const auto k : hard) count0 += k == 0;
  ASSERT_EQ(count0 % 2, 0u);
  const auto labels = label_cells(g, mask, 4, 4);
  EXPECT_EQ(labels.label[0], 0);
  EXPECT_DOUBLE_EQ(labels.foreground_fraction[0], 0.5);
}

TEST(LabelCells, ForegroundConservation) {
  std::mt19937_64 rng(137);
  for (int n = 0; n < 5; ++n) {
    const auto g = testing::random_valid_grid(4, 5, 40, 32, rng, 0.4);
    const auto mask = disk_mask(40, 32, 15.0 + n, 17.0, 9.0 + n);
    std::size_t fg = 0;
    for (const int v : mask) fg += v != 0;
    const auto labels = label_cells(g, mask, 40, 32);
    double sum = 0.0;
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      sum += labels.foreground_fraction[k] * static_cast<double>(labels.pixel_count[k]);
    }
    EXPECT_NEAR(sum, static_cast<double>(fg), 1e-9);
  }
}

TEST(LabelCells, OptimizedGridBeatsUniformOnDisk) {
  const auto mask = disk_mask(32, 32, 15.3, 16.7, 9.4);
  FeatureMap f(32, 32, 3, ChannelLayout::kRgb);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) f.pixel(i)[c] = mask[i] ? 0.9 : 0.1;
  }
  const auto uniform = build_uniform_grid(4, 4, 32, 32);
  OptimizerConfig cfg;
  cfg.iterations = 150;
  const auto optimized = deform(uniform, f, cfg).final_grid;
  const double iou_uniform =
      iou(rasterize_cell_labels(uniform, label_cells(uniform, mask, 32, 32), 32, 32), mask);
  const double iou_optimized =
      iou(rasterize_cell_labels(optimized, label_cells(optimized, mask, 32, 32), 32, 32), mask);
  EXPECT_GE(iou_optimized, iou_uniform);
}

TEST(PoolMode, Parse) {
  EXPECT_EQ(parse_pool_mode("mean"), PoolMode::kMean);
  EXPECT_EQ(parse_pool_mode("max"), PoolMode::kMax);
  EXPECT_THROW(parse_pool_mode("median"), InvalidArgument);
}

}  // namespace
}  // namespace defgrid
