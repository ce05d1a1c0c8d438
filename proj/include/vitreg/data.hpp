#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vitreg/image.hpp"
#include "vitreg/sample.hpp"

namespace vitreg {

inline constexpr std::string_view kManifestHeader = "image_path,score_total,score_left,score_right,score_kind";

struct ManifestRow {
  std::string image_path;  // relative paths resolve against the manifest's directory
  double score_total = 0.0;
  std::optional<double> score_left;
  std::optional<double> score_right;
  ScoreKind score_kind = ScoreKind::kSynthetic;

  bool operator==(const ManifestRow&) const = default;
};

// Parses and validates a manifest without touching the images. Errors name
// the 1-based line number.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
// Scores are written in shortest round-trip form; absent per-lung scores are empty cells.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

// read_manifest + decode every image; source_id is the row's image_path.
std::vector<CxrSample> load_manifest(const std::filesystem::path& path);

// Checks the score range of the kind and per-lung consistency (|y_l + y_r − y| ≤ 1e-6).
void validate_scores(double total, const std::optional<double>& left, const std::optional<double>& right,
                     ScoreKind kind);

struct PreprocessConfig {
  int target_height = 224;
  int target_width = 224;
  int channels = 3;
  std::array<float, 3> normalize_mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> normalize_std{0.25f, 0.25f, 0.25f};

  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

// Resize + channel replication, still in [0,1].
Image resize_to_model(const Image& image, const PreprocessConfig& cfg);
// Per-channel (x − mean) / std in place.
void normalize_in_place(Image& image, const PreprocessConfig& cfg);
// Bilinear resize to target, gray → C channels, then per-channel normalization.
Image preprocess(const CxrSample& sample, const PreprocessConfig& cfg);

// Synthetic radiograph-like images with per-lung scores derived from the
// exact opacity mask:
//   coverage_s = opaque pixels in half s / pixels in half s
//   score_s    = min(4, floor(5 · coverage_s / 0.76))
// Background pixels stay below kSynthOpacityThreshold and opacity pixels
// above it, also after 8-bit quantization.
inline constexpr float kSynthOpacityThreshold = 0.45f;

struct SynthOptions {
  int height = 64;
  int width = 64;
};

int coverage_score(long long covered, long long total);
std::vector<CxrSample> synth_dataset(std::size_t n, const SynthOptions& options, std::uint64_t seed);

}  // namespace vitreg
