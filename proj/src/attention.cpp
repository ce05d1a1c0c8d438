#include "vitreg/attention.hpp"

#include <cmath>

#include "vitreg/error.hpp"

namespace vitreg {

AttentionMap extract_attention(const VitWeights& weights, const Image& image, int layer,
                               AttentionAggregation aggregation, int head) {
  const VitConfig& cfg = weights.config;
  require(layer >= 0 && layer < cfg.depth, ErrorKind::kArgument,
          "attention layer " + std::to_string(layer) + " out of range [0, " + std::to_string(cfg.depth) + ")");
  if (aggregation == AttentionAggregation::kSingleHead) {
    require(head >= 0 && head < cfg.num_heads, ErrorKind::kArgument,
            "attention head " + std::to_string(head) + " out of range [0, " + std::to_string(cfg.num_heads) + ")");
  }

  AttentionCache cache;
  forward_with_attention(weights, image, cache);
  const int n = cache.num_tokens;
  const auto n_sz = static_cast<std::size_t>(n);

  auto mean_heads = [&](int l) {
    std::vector<double> m(n_sz * n_sz, 0.0);
    for (const auto& p : cache.attention[l]) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += p[i];
    }
    for (double& v : m) v /= cfg.num_heads;
    return m;
  };

  std::vector<double> cls_row(n_sz);
  switch (aggregation) {
    case AttentionAggregation::kMeanHeads: {
      const auto m = mean_heads(layer);
      std::copy_n(m.begin(), n, cls_row.begin());
      break;
    }
    case AttentionAggregation::kSingleHead: {
      const auto& p = cache.attention[layer][head];
      std::copy_n(p.begin(), n, cls_row.begin());
      break;
    }
    case AttentionAggregation::kRollout: {
      // Only the CLS row of the running product is needed: r ← r·Â_l.
      std::vector<double> r(n_sz, 0.0);
      r[0] = 1.0;
      for (int l = 0; l <= layer; ++l) {
        const auto m = mean_heads(l);
        std::vector<double> next(n_sz, 0.0);
        for (std::size_t i = 0; i < n_sz; ++i) {
          if (r[i] == 0.0) continue;
          const double* row = m.data() + i * n_sz;
          for (std::size_t j = 0; j < n_sz; ++j) next[j] += r[i] * 0.5 * row[j];
          next[i] += r[i] * 0.5;
        }
        r = std::move(next);
      }
      cls_row = std::move(r);
      break;
    }
  }

  AttentionMap map;
  map.rows = cfg.grid_height();
  map.cols = cfg.grid_width();
  map.layer_index = layer;
  map.aggregation = aggregation;
  map.head = aggregation == AttentionAggregation::kSingleHead ? head : -1;
  map.cls_weight = cls_row[0];
  map.grid.assign(cls_row.begin() + 1, cls_row.end());
  return map;
}

namespace {

struct Segment {
  int lo;
  int hi;
  double frac;
};

// Knot k sits at output index round(k·(out-1)/(in-1)); outputs between two
// knots interpolate linearly between them.
std::vector<Segment> knot_segments(int in, int out) {
  std::vector<Segment> seg(out, Segment{0, 0, 0.0});
  if (in == 1) return seg;
  std::vector<int> knots(in);
  for (int k = 0; k < in; ++k) {
    knots[k] = static_cast<int>(std::lround(static_cast<double>(k) * (out - 1) / (in - 1)));
  }
  for (int k = 0; k + 1 < in; ++k) {
    const int a = knots[k];
    const int b = knots[k + 1];
    for (int i = a; i <= b; ++i) {
      seg[i] = {k, k + 1, b == a ? 0.0 : static_cast<double>(i - a) / (b - a)};
    }
  }
  return seg;
}

}  // namespace

Image upsample_map(const AttentionMap& map, int height, int width) {
  require(map.rows > 0 && map.cols > 0 && map.grid.size() == static_cast<std::size_t>(map.rows) * map.cols,
          ErrorKind::kArgument, "attention map grid is malformed");
  require(height >= map.rows && width >= map.cols, ErrorKind::kArgument,
          "heatmap must be at least as large as the attention grid");
  const auto ys = knot_segments(map.rows, height);
  const auto xs = knot_segments(map.cols, width);
  Image out(height, width, 1);
  for (int y = 0; y < height; ++y) {
    const Segment& a = ys[y];
    for (int x = 0; x < width; ++x) {
      const Segment& b = xs[x];
      const double top = map.at(a.lo, b.lo) * (1.0 - b.frac) + map.at(a.lo, b.hi) * b.frac;
      const double bot = map.at(a.hi, b.lo) * (1.0 - b.frac) + map.at(a.hi, b.hi) * b.frac;
      out.at(y, x) = static_cast<float>(top * (1.0 - a.frac) + bot * a.frac);
    }
  }
  return out;
}

}  // namespace vitreg
