#pragma once

#include <vector>

#include "vitreg/image.hpp"
#include "vitreg/model.hpp"

namespace vitreg {

enum class AttentionAggregation { kMeanHeads, kSingleHead, kRollout };

// CLS-to-patch attention reshaped onto the patch grid.
struct AttentionMap {
  int rows = 0;  // H / P
  int cols = 0;  // W / P
  std::vector<double> grid;  // row-major rows × cols
  double cls_weight = 0.0;   // CLS-to-CLS weight; grid sum + cls_weight == 1
  int layer_index = 0;
  AttentionAggregation aggregation = AttentionAggregation::kMeanHeads;
  int head = -1;  // only for kSingleHead

  double at(int r, int c) const { return grid[static_cast<std::size_t>(r) * cols + c]; }
};

// kMeanHeads / kSingleHead read the CLS row of layer `layer`. kRollout
// multiplies (mean-head attention + I)/2 over layers 0..layer and reads the
// CLS row of the product.
AttentionMap extract_attention(const VitWeights& weights, const Image& image, int layer,
                               AttentionAggregation aggregation, int head = 0);

// Piecewise-bilinear resampling of the grid to height×width. Grid cell (r, c)
// is pinned to output pixel (round(r·(H-1)/(rows-1)), round(c·(W-1)/(cols-1))),
// so every grid value appears exactly in the output and the output range
// equals the grid range. Requires height ≥ rows and width ≥ cols.
Image upsample_map(const AttentionMap& map, int height, int width);

}  // namespace vitreg
