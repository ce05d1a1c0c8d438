#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitreg/data.hpp"
#include "vitreg/error.hpp"
#include "vitreg/rng.hpp"

namespace vitreg {

int coverage_score(long long covered, long long total) {
  require(total > 0 && covered >= 0 && covered <= total, ErrorKind::kArgument, "invalid coverage counts");
  // floor(5·(covered/total)/0.76) evaluated exactly in integers.
  return static_cast<int>(std::min<long long>(4, (500 * covered) / (76 * total)));
}

namespace {

constexpr double kBand = 0.76 / 5.0;
constexpr int kMaxBlobsPerHalf = 3;

struct Ellipse {
  double cy, cx, ry, rx;
};

struct HalfPlan {
  int x0;  // first column of the half
  int x1;  // one past the last column
  std::vector<Ellipse> blobs;
};

// Normalized squared radius of (y, x) inside e; > 1 means outside.
double ellipse_radius2(const Ellipse& e, int y, int x) {
  const double dy = (y + 0.5 - e.cy) / e.ry;
  const double dx = (x + 0.5 - e.cx) / e.rx;
  return dy * dy + dx * dx;
}

long long covered_pixels(const HalfPlan& half, int height) {
  long long n = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = half.x0; x < half.x1; ++x) {
      for (const Ellipse& e : half.blobs) {
        if (ellipse_radius2(e, y, x) <= 1.0) {
          ++n;
          break;
        }
      }
    }
  }
  return n;
}

std::vector<Ellipse> draw_blobs(int count, double target_area, int height, int x0, int x1, Rng& rng) {
  std::vector<double> share(count);
  double total = 0.0;
  for (double& s : share) total += (s = rng.uniform(0.5, 1.5));
  std::vector<Ellipse> blobs;
  for (int i = 0; i < count; ++i) {
    const double area = target_area * share[i] / total;
    const double aspect = rng.uniform(0.6, 1.6);
    Ellipse e;
    e.ry = std::max(1.0, std::sqrt(area * aspect / std::numbers::pi));
    e.rx = std::max(1.0, area / (std::numbers::pi * e.ry));
    e.cy = rng.uniform(0.15, 0.85) * height;
    e.cx = x0 + rng.uniform(0.15, 0.85) * (x1 - x0);
    blobs.push_back(e);
  }
  return blobs;
}

// Places blobs so the half's coverage lands in the band of `target_score`.
// The stored label is always recomputed from the final mask, so a miss only
// perturbs the score distribution, never label correctness.
HalfPlan plan_half(int target_score, int height, int x0, int x1, Rng& rng) {
  HalfPlan half{x0, x1, {}};
  const long long pixels = static_cast<long long>(height) * (x1 - x0);
  if (target_score == 0) {
    if (rng.uniform() < 0.5) return half;
    const double coverage = rng.uniform(0.02, 0.12);
    half.blobs = draw_blobs(1, coverage * pixels, height, x0, x1, rng);
    if (coverage_score(covered_pixels(half, height), pixels) != 0) half.blobs.clear();
    return half;
  }
  const double lo = target_score * kBand;
  const double hi = target_score == 4 ? 0.95 : (target_score + 1) * kBand;
  const double margin = 0.15 * (hi - lo);
  const double coverage = rng.uniform(lo + margin, hi - margin);
  const int count = static_cast<int>(rng.integer(1, kMaxBlobsPerHalf));
  double scale = 1.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    half.blobs = draw_blobs(count, coverage * pixels * scale, height, x0, x1, rng);
    const long long covered = covered_pixels(half, height);
    if (coverage_score(covered, pixels) == target_score) return half;
    const double achieved = std::max(1.0, static_cast<double>(covered)) / pixels;
    scale = std::clamp(scale * coverage / achieved, 0.25, 8.0);
  }
  return half;
}

CxrSample render(const SynthOptions& opt, Rng& rng, std::size_t index) {
  const int h = opt.height;
  const int w = opt.width;
  const int mid = w / 2;

  // Total score uniform over 0..8, split uniformly over feasible (left, right).
  const int total = static_cast<int>(rng.integer(0, 8));
  const int left = static_cast<int>(rng.integer(std::max(0, total - 4), std::min(4, total)));
  const HalfPlan halves[2] = {plan_half(left, h, 0, mid, rng), plan_half(total - left, h, mid, w, rng)};

  const double base = rng.uniform(0.08, 0.18);
  const double tilt = rng.uniform(0.0, 0.06);
  const double wave_amp = rng.uniform(0.0, 0.03);
  const double wave_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double blob_base = rng.uniform(0.6, 0.66);

  Image image(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const HalfPlan& half = x < mid ? halves[0] : halves[1];
      double best = 2.0;
      for (const Ellipse& e : half.blobs) best = std::min(best, ellipse_radius2(e, y, x));
      double v;
      if (best <= 1.0) {
        v = blob_base + 0.26 * (1.0 - best) + rng.uniform(-0.03, 0.03);
      } else {
        v = base + tilt * y / h + wave_amp * std::sin(2.0 * std::numbers::pi * x / w + wave_phase) +
            rng.uniform(-0.02, 0.02);
      }
      image.at(y, x) = static_cast<float>(v);
    }
  }
  quantize_8bit(image);

  // Labels come from the emitted pixels.
  long long covered[2] = {0, 0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (image.at(y, x) > kSynthOpacityThreshold) ++covered[x < mid ? 0 : 1];
    }
  }
  CxrSample s;
  s.image = std::move(image);
  s.score_left = coverage_score(covered[0], static_cast<long long>(h) * mid);
  s.score_right = coverage_score(covered[1], static_cast<long long>(h) * (w - mid));
  s.score_total = *s.score_left + *s.score_right;
  s.score_kind = ScoreKind::kSynthetic;
  char id[32];
  std::snprintf(id, sizeof(id), "synth_%05zu", index);
  s.source_id = id;
  return s;
}

}  // namespace

std::vector<CxrSample> synth_dataset(std::size_t n, const SynthOptions& options, std::uint64_t seed) {
  require(n > 0, ErrorKind::kArgument, "synth_dataset needs n > 0");
  require(options.height >= 4 && options.width >= 4, ErrorKind::kArgument, "synthetic images must be at least 4x4");
  std::vector<CxrSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, SeedStream::kSynth, i));
    out.push_back(render(options, rng, i));
  }
  return out;
}

}  // namespace vitreg
