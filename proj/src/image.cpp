#include "vitreg/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vitreg/error.hpp"

namespace vitreg {

namespace {

struct Tap {
  int lo;
  int hi;
  float frac;
};

std::vector<Tap> linear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(src - lo)};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& src, int height, int width) {
  require(height > 0 && width > 0, ErrorKind::kArgument, "resize target must be positive");
  require(src.height > 0 && src.width > 0 && src.channels > 0, ErrorKind::kArgument,
          "cannot resize an empty image");
  if (src.height == height && src.width == width) return src;

  const auto ty = linear_taps(src.height, height);
  const auto tx = linear_taps(src.width, width);
  Image out(height, width, src.channels);
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < src.channels; ++c) {
        const float top = src.at(a.lo, b.lo, c) + b.frac * (src.at(a.lo, b.hi, c) - src.at(a.lo, b.lo, c));
        const float bot = src.at(a.hi, b.lo, c) + b.frac * (src.at(a.hi, b.hi, c) - src.at(a.hi, b.lo, c));
        out.at(y, x, c) = top + a.frac * (bot - top);
      }
    }
  }
  return out;
}

Image replicate_channels(const Image& src, int channels) {
  if (src.channels == channels) return src;
  require(src.channels == 1, ErrorKind::kShape,
          "cannot convert " + std::to_string(src.channels) + "-channel image to " +
              std::to_string(channels) + " channels");
  Image out(src.height, src.width, channels);
  for (std::size_t i = 0, n = static_cast<std::size_t>(src.height) * src.width; i < n; ++i) {
    std::fill_n(out.pixels.begin() + static_cast<std::ptrdiff_t>(i * channels), channels, src.pixels[i]);
  }
  return out;
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    fail(ErrorKind::kIngest, "cannot decode image '" + path.string() + "': " + png.message);
  }
  const bool colour = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = colour ? 3 : 1;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = png.message;
    png_image_free(&png);
    fail(ErrorKind::kIngest, "cannot decode image '" + path.string() + "': " + message);
  }
  Image out(static_cast<int>(png.height), static_cast<int>(png.width), channels);
  for (std::size_t i = 0; i < buffer.size(); ++i) out.pixels[i] = buffer[i] / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  require(image.channels == 1 || image.channels == 3, ErrorKind::kArgument,
          "PNG output supports 1 or 3 channels");
  std::vector<unsigned char> buffer(image.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    fail(ErrorKind::kIo, "cannot write image '" + path.string() + "': " + png.message);
  }
}

void quantize_8bit(Image& image) {
  for (float& v : image.pixels) {
    v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
  }
}

}  // namespace vitreg
