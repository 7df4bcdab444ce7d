#include "defgrid/metrics.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <unordered_map>

namespace defgrid {

namespace {

void check_same_extent(const SegmentationMap& a, const SegmentationMap& b) {
  if (a.width != b.width || a.height != b.height || a.ids.size() != b.ids.size() ||
      a.ids.size() != a.width * a.height) {
    throw DimensionMismatch(fmt::format("segmentations {}x{} and {}x{} differ in extent", a.width,
                                        a.height, b.width, b.height));
  }
}

// Prefix sums over a 0/1 map for window counts.
class Integral {
 public:
  Integral(const std::vector<std::uint8_t>& map, std::size_t width, std::size_t height)
      : w_(width), h_(height), sum_((width + 1) * (height + 1), 0) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        sum_[(y + 1) * (w_ + 1) + x + 1] = map[y * width + x] + sum_[y * (w_ + 1) + x + 1] +
                                           sum_[(y + 1) * (w_ + 1) + x] - sum_[y * (w_ + 1) + x];
      }
    }
  }

  bool any_within(std::size_t x, std::size_t y, std::size_t r) const {
    const std::size_t x0 = x > r ? x - r : 0;
    const std::size_t y0 = y > r ? y - r : 0;
    const std::size_t x1 = std::min(w_, x + r + 1);
    const std::size_t y1 = std::min(h_, y + r + 1);
    const long count = sum_[y1 * (w_ + 1) + x1] - sum_[y0 * (w_ + 1) + x1] -
                       sum_[y1 * (w_ + 1) + x0] + sum_[y0 * (w_ + 1) + x0];
    return count > 0;
  }

 private:
  std::size_t w_;
  std::size_t h_;
  std::vector<long> sum_;
};

double matched_fraction(const std::vector<std::uint8_t>& source,
                        const std::vector<std::uint8_t>& target, std::size_t width,
                        std::size_t height, std::size_t tolerance) {
  const auto total = std::count(source.begin(), source.end(), std::uint8_t{1});
  if (total == 0) {
    return std::none_of(target.begin(), target.end(), [](std::uint8_t t) { return t != 0; })
               ? 1.0
               : 0.0;
  }
  const Integral integral(target, width, height);
  long matched = 0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (source[y * width + x] && integral.any_within(x, y, tolerance)) ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace

double metric_asa(const SegmentationMap& pred, const SegmentationMap& gt) {
  check_same_extent(pred, gt);
  if (pred.ids.empty()) return 1.0;
  std::unordered_map<int, std::map<int, std::size_t>> overlap;
  for (std::size_t i = 0; i < pred.ids.size(); ++i) ++overlap[pred.ids[i]][gt.ids[i]];
  std::size_t total = 0;
  for (const auto& [p, row] : overlap) {
    std::size_t best = 0;
    for (const auto& [g, n] : row) best = std::max(best, n);
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(pred.ids.size());
}

std::vector<std::uint8_t> boundary_map(const SegmentationMap& map) {
  const std::size_t w = map.width;
  const std::size_t h = map.height;
  std::vector<std::uint8_t> out(w * h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const int id = map.at(x, y);
      const bool edge = (x > 0 && map.at(x - 1, y) != id) || (x + 1 < w && map.at(x + 1, y) != id) ||
                        (y > 0 && map.at(x, y - 1) != id) || (y + 1 < h && map.at(x, y + 1) != id);
      out[y * w + x] = edge ? 1 : 0;
    }
  }
  return out;
}

BoundaryScore metric_boundary(const SegmentationMap& pred, const SegmentationMap& gt,
                              std::size_t tolerance) {
  check_same_extent(pred, gt);
  const auto pb = boundary_map(pred);
  const auto gb = boundary_map(gt);
  BoundaryScore s;
  s.precision = matched_fraction(pb, gb, pred.width, pred.height, tolerance);
  s.recall = matched_fraction(gb, pb, pred.width, pred.height, tolerance);
  s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                     : 0.0;
  return s;
}

BoundaryScore mask_boundary_f(std::span<const std::uint8_t> pred,
                              std::span<const std::uint8_t> gt, std::size_t width,
                              std::size_t height, std::size_t tolerance) {
  if (pred.size() != width * height || gt.size() != width * height) {
    throw DimensionMismatch("mask sizes do not match extent");
  }
  SegmentationMap p{width, height, std::vector<int>(pred.begin(), pred.end())};
  SegmentationMap g{width, height, std::vector<int>(gt.begin(), gt.end())};
  for (auto& v : p.ids) v = v != 0;
  for (auto& v : g.ids) v = v != 0;
  return metric_boundary(p, g, tolerance);
}

double metric_miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw DimensionMismatch("masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0;
    const bool b = gt[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace defgrid
