#include "defgrid/features.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>

#include <utility>

namespace defgrid {

std::string_view to_string(ChannelLayout layout) {
  switch (layout) {
    case ChannelLayout::kRgb:
      return "rgb";
    case ChannelLayout::kRgbOneHot:
      return "rgb+onehot";
    case ChannelLayout::kGeneric:
      return "generic";
  }
  return "generic";
}

FeatureMap::FeatureMap(std::size_t width, std::size_t height, std::size_t channels,
                       ChannelLayout layout)
    : width_(width),
      height_(height),
      channels_(channels),
      layout_(layout),
      data_(width * height * channels, 0.0) {}

FeatureMap::FeatureMap(std::size_t width, std::size_t height, std::size_t channels,
                       std::vector<double> data, ChannelLayout layout)
    : width_(width), height_(height), channels_(channels), layout_(layout), data_(std::move(data)) {
  if (data_.size() != width * height * channels) {
    throw DimensionMismatch(fmt::format("feature data has {} values, expected {}x{}x{}",
                                        data_.size(), width, height, channels));
  }
}

FeatureMap append_one_hot(const FeatureMap& rgb, std::span<const int> labels, std::size_t classes) {
  if (labels.size() != rgb.pixel_count()) {
    throw DimensionMismatch("label map does not match feature extent");
  }
  const std::size_t d = rgb.channels() + classes;
  FeatureMap out(rgb.width(), rgb.height(), d, ChannelLayout::kRgbOneHot);
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    auto dst = out.pixel(i);
    auto src = rgb.pixel(i);
    std::copy(src.begin(), src.end(), dst.begin());
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InvalidArgument(fmt::format("label {} outside [0, {})", label, classes));
    }
    dst[rgb.channels() + static_cast<std::size_t>(label)] = 1.0;
  }
  return out;
}

}  // namespace defgrid
