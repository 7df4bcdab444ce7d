#include "defgrid/image_io.hpp"

#include "defgrid/errors.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace defgrid {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw InvalidArgument(fmt::format("PNG: {}", png.message));
  }
  const bool wide = (png.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (wide ? PNG_FORMAT_FLAG_LINEAR : 0);
  Image img;
  img.width = png.width;
  img.height = png.height;
  img.channels = color ? 3 : 1;
  img.max_value = wide ? 65535 : 255;
  const std::size_t n = img.width * img.height * img.channels;
  if (wide) {
    img.samples.resize(n);
    if (!png_image_finish_read(&png, nullptr, img.samples.data(), 0, nullptr)) {
      throw InvalidArgument(fmt::format("PNG: {}", png.message));
    }
  } else {
    std::vector<std::uint8_t> raw(n);
    if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
      throw InvalidArgument(fmt::format("PNG: {}", png.message));
    }
    img.samples.assign(raw.begin(), raw.end());
  }
  return img;
}

class PnmParser {
 public:
  explicit PnmParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw InvalidArgument("malformed PNM header");
    }
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 30)) throw InvalidArgument("PNM value out of range");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw InvalidArgument("malformed PNM header");
    }
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  const char kind = static_cast<char>(bytes[1]);
  PnmParser p(bytes);
  Image img;
  img.channels = (kind == '3' || kind == '6') ? 3 : 1;
  img.width = p.number();
  img.height = p.number();
  const std::size_t maxval = p.number();
  if (img.width == 0 || img.height == 0) throw InvalidArgument("PNM image is empty");
  if (maxval == 0 || maxval > 65535) throw InvalidArgument("PNM maxval out of range");
  img.max_value = static_cast<std::uint16_t>(maxval);
  const std::size_t n = img.width * img.height * img.channels;
  img.samples.resize(n);
  if (kind == '2' || kind == '3') {
    for (auto& s : img.samples) {
      const std::size_t v = p.number();
      if (v > maxval) throw InvalidArgument("PNM sample exceeds maxval");
      s = static_cast<std::uint16_t>(v);
    }
    return img;
  }
  p.single_space();
  const auto data = p.rest();
  const std::size_t width_bytes = maxval > 255 ? 2 : 1;
  if (data.size() < n * width_bytes) throw InvalidArgument("PNM data is truncated");
  for (std::size_t i = 0; i < n; ++i) {
    img.samples[i] = width_bytes == 2
                         ? static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1])
                         : data[i];
  }
  return img;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature),
                                      bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  throw InvalidArgument("unrecognized image format (expected PNG or PNM)");
}

Image read_image(const std::filesystem::path& path) { return decode_image(read_bytes(path)); }

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgument("PNG output needs 1 or 3 channels");
  }
  if (image.max_value > 255) throw InvalidArgument("PNG output is 8-bit; use PGM for 16-bit");
  std::vector<std::uint8_t> raw(image.samples.begin(), image.samples.end());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw Error(fmt::format("PNG: {}", png.message));
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw Error(fmt::format("PNG: {}", png.message));
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_pgm(const Image& image) {
  if (image.channels != 1) throw InvalidArgument("PGM output needs one channel");
  const std::string header = fmt::format("P5\n{} {}\n{}\n", image.width, image.height,
                                         image.max_value);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = image.max_value > 255;
  out.reserve(out.size() + image.samples.size() * (wide ? 2 : 1));
  for (const std::uint16_t s : image.samples) {
    if (wide) out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

FeatureMap image_to_features(const Image& image) {
  FeatureMap f(image.width, image.height, 3, ChannelLayout::kRgb);
  const double scale = 1.0 / static_cast<double>(image.max_value);
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    auto px = f.pixel(i);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = image.channels == 3 ? c : 0;
      px[c] = static_cast<double>(image.samples[i * image.channels + src]) * scale;
    }
  }
  return f;
}

Image features_to_image(const FeatureMap& features) {
  Image img;
  img.width = features.width();
  img.height = features.height();
  img.channels = features.channels() >= 3 ? 3 : 1;
  img.max_value = 255;
  img.samples.resize(img.width * img.height * img.channels);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    const auto px = features.pixel(i);
    for (std::size_t c = 0; c < img.channels; ++c) {
      const double v = std::clamp(px[c], 0.0, 1.0);
      img.samples[i * img.channels + c] = static_cast<std::uint16_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

std::vector<std::uint8_t> image_to_mask(const Image& image) {
  std::vector<std::uint8_t> mask(image.width * image.height);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = image.samples[i * image.channels] != 0;
  return mask;
}

Image mask_to_image(std::span<const std::uint8_t> mask, std::size_t width, std::size_t height) {
  if (mask.size() != width * height) throw DimensionMismatch("mask size does not match extent");
  Image img{width, height, 1, 255, {}};
  img.samples.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) img.samples[i] = mask[i] ? 255 : 0;
  return img;
}

std::vector<int> image_to_labels(const Image& image) {
  std::vector<int> labels(image.width * image.height);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = image.samples[i * image.channels];
  return labels;
}

Image labels_to_image(std::span<const int> labels, std::size_t width, std::size_t height,
                      std::uint16_t max_value) {
  if (labels.size() != width * height) throw DimensionMismatch("label count does not match extent");
  Image img{width, height, 1, max_value, {}};
  img.samples.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > max_value) {
      throw InvalidArgument(fmt::format("label {} does not fit in {}", labels[i], max_value));
    }
    img.samples[i] = static_cast<std::uint16_t>(labels[i]);
  }
  return img;
}

}  // namespace defgrid
