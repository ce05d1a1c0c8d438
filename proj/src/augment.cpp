#include "vitreg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "vitreg/error.hpp"

namespace vitreg {

namespace {

constexpr std::string_view kFlipSuffix = "~flip";

void require_same_shape(const CxrSample& a, const CxrSample& b, std::string_view op) {
  require(a.image.same_shape(b.image), ErrorKind::kAugmentation,
          std::string(op) + ": images '" + a.source_id + "' and '" + b.source_id + "' differ in size");
}

// Convex combination that is exact at the endpoints and never leaves [min, max].
double mix_scores(double lambda, double ya, double yb) {
  const double y = yb + lambda * (ya - yb);
  return std::clamp(y, std::min(ya, yb), std::max(ya, yb));
}

// Copy columns [x0, x1) of every row from src into dst.
void copy_columns(const Image& src, Image& dst, int x0, int x1) {
  const std::size_t run = static_cast<std::size_t>(x1 - x0) * src.channels;
  for (int y = 0; y < src.height; ++y) {
    std::copy_n(src.pixels.begin() + static_cast<std::ptrdiff_t>(src.index(y, x0, 0)), run,
                dst.pixels.begin() + static_cast<std::ptrdiff_t>(dst.index(y, x0, 0)));
  }
}

}  // namespace

void CutMixParams::validate() const {
  require(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max < 1.0, ErrorKind::kArgument,
          "CutMix lambda range must satisfy 0 < lambda_min <= lambda_max < 1");
}

std::pair<CxrSample, CxrSample> lung_score_replace(const CxrSample& a, const CxrSample& b) {
  for (const CxrSample* s : {&a, &b}) {
    require(s->has_lung_scores(), ErrorKind::kAugmentation,
            "lung replacement requires individual ground truth scores; sample '" + s->source_id +
                "' has none");
  }
  require_same_shape(a, b, "lung replacement");
  require(a.score_kind == b.score_kind, ErrorKind::kAugmentation,
          "lung replacement mixes score kinds " + std::string(score_kind_name(a.score_kind)) + " and " +
              std::string(score_kind_name(b.score_kind)));

  const int mid = a.image.width / 2;
  auto combine = [mid](const CxrSample& left, const CxrSample& right) {
    CxrSample out;
    out.image = left.image;
    copy_columns(right.image, out.image, mid, right.image.width);
    out.score_left = left.score_left;
    out.score_right = right.score_right;
    out.score_total = *left.score_left + *right.score_right;
    out.score_kind = left.score_kind;
    out.source_id = "lr:" + left.source_id + "|" + right.source_id;
    return out;
  };
  return {combine(a, b), combine(b, a)};
}

std::vector<CxrSample> expand_dataset(const std::vector<CxrSample>& samples, std::uint64_t seed) {
  for (const CxrSample& s : samples) {
    require(s.has_lung_scores(), ErrorKind::kAugmentation,
            "dataset expansion requires individual ground truth scores; sample '" + s.source_id +
                "' has none");
  }
  std::vector<CxrSample> out = samples;
  const std::size_t pairs = samples.size() / 2;
  out.reserve(samples.size() + 4 * pairs);
  for (std::uint64_t round = 0; round < 2; ++round) {
    Rng rng(derive_seed(seed, SeedStream::kExpand, round));
    const auto order = rng.permutation(samples.size());
    for (std::size_t i = 0; i < pairs; ++i) {
      auto [first, second] = lung_score_replace(samples[order[2 * i]], samples[order[2 * i + 1]]);
      out.push_back(std::move(first));
      out.push_back(std::move(second));
    }
  }
  return out;
}

CutBox draw_cut_box(int height, int width, const CutMixParams& params, Rng& rng) {
  params.validate();
  require(height > 0 && width > 0, ErrorKind::kArgument, "CutMix on an empty image");
  const double replaced = rng.uniform(1.0 - params.lambda_max, 1.0 - params.lambda_min);
  const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  const double area = replaced * height * width;
  CutBox box;
  box.height = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, height);
  box.width = std::clamp(static_cast<int>(std::lround(area / box.height)), 1, width);
  box.top = static_cast<int>(rng.integer(0, height - box.height));
  box.left = static_cast<int>(rng.integer(0, width - box.width));
  return box;
}

CutMixResult score_cutmix_box(const CxrSample& a, const CxrSample& b, const CutBox& box) {
  require_same_shape(a, b, "CutMix");
  const Image& ia = a.image;
  require(box.top >= 0 && box.left >= 0 && box.height >= 0 && box.width >= 0 &&
              box.top + box.height <= ia.height && box.left + box.width <= ia.width,
          ErrorKind::kAugmentation, "CutMix box lies outside the image");

  CutMixResult r;
  r.box = box;
  r.sample.image = ia;
  const std::size_t run = static_cast<std::size_t>(box.width) * ia.channels;
  for (int y = box.top; y < box.top + box.height; ++y) {
    const auto offset = static_cast<std::ptrdiff_t>(ia.index(y, box.left, 0));
    std::copy_n(b.image.pixels.begin() + offset, run, r.sample.image.pixels.begin() + offset);
  }
  const long long total = static_cast<long long>(ia.height) * ia.width;
  r.lambda = static_cast<double>(total - box.area()) / static_cast<double>(total);
  r.sample.score_total = mix_scores(r.lambda, a.score_total, b.score_total);
  r.sample.score_kind = a.score_kind;
  r.sample.source_id = "cutmix:" + a.source_id + "|" + b.source_id;
  return r;
}

CutMixResult score_cutmix(const CxrSample& a, const CxrSample& b, const CutMixParams& params, Rng& rng) {
  require_same_shape(a, b, "CutMix");
  return score_cutmix_box(a, b, draw_cut_box(a.image.height, a.image.width, params, rng));
}

CxrSample score_mixup(const CxrSample& a, const CxrSample& b, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kArgument,
          "MixUp lambda must lie in [0, 1], got " + std::to_string(lambda));
  require_same_shape(a, b, "MixUp");
  if (lambda == 1.0) return a;

  CxrSample out;
  out.image = a.image;
  const float l = static_cast<float>(lambda);
  for (std::size_t i = 0; i < out.image.pixels.size(); ++i) {
    const float pa = a.image.pixels[i];
    const float pb = b.image.pixels[i];
    out.image.pixels[i] = std::clamp(l * pa + (1.0f - l) * pb, std::min(pa, pb), std::max(pa, pb));
  }
  out.score_total = mix_scores(lambda, a.score_total, b.score_total);
  if (a.has_lung_scores() && b.has_lung_scores()) {
    out.score_left = mix_scores(lambda, *a.score_left, *b.score_left);
    out.score_right = mix_scores(lambda, *a.score_right, *b.score_right);
  }
  out.score_kind = a.score_kind;
  out.source_id = "mixup:" + a.source_id + "|" + b.source_id;
  return out;
}

CxrSample hflip(const CxrSample& a) {
  CxrSample out = a;
  const Image& src = a.image;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < src.channels; ++c) out.image.at(y, x, c) = src.at(y, src.width - 1 - x, c);
    }
  }
  std::swap(out.score_left, out.score_right);
  if (out.source_id.ends_with(kFlipSuffix)) {
    out.source_id.resize(out.source_id.size() - kFlipSuffix.size());
  } else {
    out.source_id += kFlipSuffix;
  }
  return out;
}

}  // namespace vitreg
