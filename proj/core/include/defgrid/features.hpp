#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace defgrid {

enum class ChannelLayout {
  kRgb,        // three channels in [0,1]
  kRgbOneHot,  // RGB followed by a one-hot class vector
  kGeneric,
};

std::string_view to_string(ChannelLayout layout);

/// Row-major per-pixel feature vectors; pixel (x, y) is index y * width + x.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t width, std::size_t height, std::size_t channels,
             ChannelLayout layout = ChannelLayout::kGeneric);
  FeatureMap(std::size_t width, std::size_t height, std::size_t channels,
             std::vector<double> data, ChannelLayout layout = ChannelLayout::kGeneric);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }
  ChannelLayout layout() const { return layout_; }

  std::span<const double> pixel(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * channels_, channels_);
  }
  std::span<double> pixel(std::size_t i) {
    return std::span<double>(data_).subspan(i * channels_, channels_);
  }
  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return data_[(y * width_ + x) * channels_ + c];
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  ChannelLayout layout_ = ChannelLayout::kGeneric;
  std::vector<double> data_;
};

/// Appends a one-hot encoding of `labels` (values < classes) to RGB features.
FeatureMap append_one_hot(const FeatureMap& rgb, std::span<const int> labels, std::size_t classes);

}  // namespace defgrid
