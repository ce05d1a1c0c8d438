#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace vitreg {

// Dense H×W×C float image, row-major with interleaved channels.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int y, int x, int c = 0) { return pixels[index(y, x, c)]; }
  float at(int y, int x, int c = 0) const { return pixels[index(y, x, c)]; }

  std::size_t size() const { return pixels.size(); }
  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
  bool operator==(const Image&) const = default;
};

// Bilinear resampling with half-pixel centres and edge clamping. Resizing to
// the same dimensions returns the input unchanged.
Image resize_bilinear(const Image& src, int height, int width);

// 1-channel → `channels` copies; a 3-channel image is returned unchanged.
Image replicate_channels(const Image& src, int channels);

// PNG I/O. Decoded images are 1-channel (gray) or 3-channel (colour) in [0,1];
// alpha is dropped. Writing quantizes to 8 bits with rounding.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// Round every pixel to the nearest multiple of 1/255 (what a PNG round trip does).
void quantize_8bit(Image& image);

}  // namespace vitreg
