#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vitreg/rng.hpp"
#include "vitreg/sample.hpp"

namespace vitreg {

// Range of the retained-area fraction λ of the base image in score CutMix.
struct CutMixParams {
  double lambda_min = 0.5;
  double lambda_max = 0.9;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Rectangle [top, top+height) × [left, left+width) copied from the partner.
struct CutBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  long long area() const { return static_cast<long long>(height) * width; }
};

struct CutMixResult {
  CxrSample sample;
  CutBox box;
  double lambda = 1.0;  // retained pixel count of A / (H·W)
};

// Swap image halves (split at column W/2) between two samples whose per-lung
// scores are known. First output is [left of a | right of b], second is
// [left of b | right of a]; scores add accordingly.
std::pair<CxrSample, CxrSample> lung_score_replace(const CxrSample& a, const CxrSample& b);

// Originals followed by two rounds of seeded pairing; each round shuffles,
// pairs consecutive samples and keeps both swap outputs. Yields 3n samples for
// even n and 3n−2 for odd n (the last sample of each round stays unpaired).
std::vector<CxrSample> expand_dataset(const std::vector<CxrSample>& samples, std::uint64_t seed);

// Draws the replaced box: area fraction uniform in [1−λmax, 1−λmin], aspect
// ratio log-uniform in [1/2, 2], position uniform with the box fully inside.
CutBox draw_cut_box(int height, int width, const CutMixParams& params, Rng& rng);

// Pastes the co-located `box` of b into a; ȳ = λ·y_A + (1−λ)·y_B with λ the
// exact retained fraction of a. Per-lung scores are dropped.
CutMixResult score_cutmix_box(const CxrSample& a, const CxrSample& b, const CutBox& box);
CutMixResult score_cutmix(const CxrSample& a, const CxrSample& b, const CutMixParams& params, Rng& rng);

// image = λ·a + (1−λ)·b, ȳ = λ·y_A + (1−λ)·y_B. λ = 1 returns a unchanged.
CxrSample score_mixup(const CxrSample& a, const CxrSample& b, double lambda);

// Mirror about the vertical axis; per-lung scores swap sides.
CxrSample hflip(const CxrSample& a);

}  // namespace vitreg
