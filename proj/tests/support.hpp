#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "vitreg/image.hpp"
#include "vitreg/model.hpp"
#include "vitreg/rng.hpp"

namespace vitreg::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vitreg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(int h, int w, int c, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Image img(h, w, c);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

// 8×8 images, 4-pixel patches, one layer of width 8 with two heads.
inline VitConfig tiny_test_config() {
  VitConfig c;
  c.image_height = 8;
  c.image_width = 8;
  c.channels = 1;
  c.patch_size = 4;
  c.depth = 1;
  c.embed_dim = 8;
  c.num_heads = 2;
  c.mlp_hidden = 16;
  c.fc1_width = 6;
  return c;
}

}  // namespace vitreg::testing
