#pragma once

#include "defgrid/features.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace defgrid {

/// Interleaved 8- or 16-bit samples, 1 (gray) or 3 (RGB) channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::uint16_t max_value = 255;
  std::vector<std::uint16_t> samples;

  std::uint16_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return samples[(y * width + x) * channels + c];
  }
};

/// PNG or binary/ASCII PNM (P2, P3, P5, P6), chosen by content.
Image read_image(const std::filesystem::path& path);
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Image& image);
/// Binary PGM (P5); 16-bit big-endian samples when max_value > 255.
std::vector<std::uint8_t> encode_pgm(const Image& image);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// RGB features in [0, 1]; gray images are replicated to three channels.
FeatureMap image_to_features(const Image& image);
/// Quantizes the first three channels (or channel 0 for gray) to 8 bits.
Image features_to_image(const FeatureMap& features);

/// Nonzero samples of the first channel.
std::vector<std::uint8_t> image_to_mask(const Image& image);
Image mask_to_image(std::span<const std::uint8_t> mask, std::size_t width, std::size_t height);
/// First-channel samples as integer labels.
std::vector<int> image_to_labels(const Image& image);
/// Gray image with the given sample range (255: 8-bit, 65535: 16-bit).
/// Throws InvalidArgument for labels outside [0, max_value].
Image labels_to_image(std::span<const int> labels, std::size_t width, std::size_t height,
                      std::uint16_t max_value = 65535);

}  // namespace defgrid
