#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "support.hpp"
#include "vitreg/attention.hpp"
#include "vitreg/error.hpp"

namespace vitreg {
namespace {

using testing::random_image;

TEST(AttentionCache, EveryRowIsADistribution) {
  const VitConfig c = VitConfig::toy();
  Rng rng(4);
  for (int seed : {1, 2, 3}) {
    const VitWeights w = init_weights(c, seed);
    const Image img = random_image(32, 32, 3, rng, -2, 2);
    AttentionCache cache;
    const ScorePrediction p = forward_with_attention(w, img, cache);
    EXPECT_EQ(p.p_total, forward(w, std::span<const Image>(&img, 1))[0].p_total);
    ASSERT_EQ(cache.attention.size(), static_cast<std::size_t>(c.depth));
    EXPECT_EQ(cache.num_tokens, c.num_tokens());
    for (const auto& layer : cache.attention) {
      ASSERT_EQ(layer.size(), static_cast<std::size_t>(c.num_heads));
      for (const auto& head : layer) {
        ASSERT_EQ(head.size(), static_cast<std::size_t>(c.num_tokens() * c.num_tokens()));
        for (int r = 0; r < c.num_tokens(); ++r) {
          double s = 0;
          for (int k = 0; k < c.num_tokens(); ++k) {
            const float v = head[r * c.num_tokens() + k];
            EXPECT_GE(v, 0.0f);
            s += v;
          }
          EXPECT_NEAR(s, 1.0, 1e-5);
        }
      }
    }
  }
}

TEST(ExtractAttention, GridShapeAndNormalization) {
  const VitConfig c = VitConfig::toy();
  const VitWeights w = init_weights(c, 5);
  Rng rng(6);
  const Image img = random_image(32, 32, 3, rng);
  AttentionCache cache;
  forward_with_attention(w, img, cache);
  for (int layer = 0; layer < c.depth; ++layer) {
    for (auto agg : {AttentionAggregation::kMeanHeads, AttentionAggregation::kSingleHead,
                     AttentionAggregation::kRollout}) {
      const AttentionMap m = extract_attention(w, img, layer, agg, 1);
      EXPECT_EQ(m.rows, 4);
      EXPECT_EQ(m.cols, 4);
      ASSERT_EQ(m.grid.size(), 16u);
      const double total = std::accumulate(m.grid.begin(), m.grid.end(), m.cls_weight);
      EXPECT_NEAR(total, 1.0, 1e-5);
      EXPECT_EQ(m.layer_index, layer);
    }
    // Mean over heads of the cached CLS row.
    const AttentionMap mean = extract_attention(w, img, layer, AttentionAggregation::kMeanHeads);
    for (int k = 0; k < 16; ++k) {
      double expect = 0;
      for (int h = 0; h < c.num_heads; ++h) expect += cache.attention[layer][h][1 + k];
      EXPECT_NEAR(mean.grid[k], expect / c.num_heads, 1e-7);
    }
    const AttentionMap single = extract_attention(w, img, layer, AttentionAggregation::kSingleHead, 2);
    for (int k = 0; k < 16; ++k) EXPECT_NEAR(single.grid[k], cache.attention[layer][2][1 + k], 1e-7);
  }
}

TEST(ExtractAttention, RolloutOfOneLayerIsHalfIdentityPlusMean) {
  VitConfig c = VitConfig::toy();
  c.depth = 1;
  const VitWeights w = init_weights(c, 8);
  Rng rng(1);
  const Image img = random_image(32, 32, 3, rng);
  const AttentionMap mean = extract_attention(w, img, 0, AttentionAggregation::kMeanHeads);
  const AttentionMap roll = extract_attention(w, img, 0, AttentionAggregation::kRollout);
  for (std::size_t k = 0; k < mean.grid.size(); ++k) EXPECT_NEAR(roll.grid[k], 0.5 * mean.grid[k], 1e-7);
  EXPECT_NEAR(roll.cls_weight, 0.5 * mean.cls_weight + 0.5, 1e-7);
}

TEST(ExtractAttention, ArgumentErrors) {
  const VitConfig c = VitConfig::toy();
  const VitWeights w = init_weights(c, 5);
  const Image img(32, 32, 3, 0.1f);
  for (int layer : {-1, 2, 7}) {
    try {
      extract_attention(w, img, layer, AttentionAggregation::kMeanHeads);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kArgument);
    }
  }
  EXPECT_THROW(extract_attention(w, img, 0, AttentionAggregation::kSingleHead, 4), Error);
  EXPECT_THROW(extract_attention(w, Image(16, 16, 3), 0, AttentionAggregation::kMeanHeads), Error);
}

AttentionMap grid_map(int rows, int cols, std::vector<double> values) {
  AttentionMap m;
  m.rows = rows;
  m.cols = cols;
  m.grid = std::move(values);
  return m;
}

TEST(UpsampleMap, ConstantAndDegenerateGrids) {
  const Image flat = upsample_map(grid_map(3, 3, std::vector<double>(9, 0.125)), 17, 23);
  ASSERT_EQ(flat.height, 17);
  ASSERT_EQ(flat.width, 23);
  for (float v : flat.pixels) EXPECT_FLOAT_EQ(v, 0.125f);
  const Image one = upsample_map(grid_map(1, 1, {0.7}), 5, 9);
  for (float v : one.pixels) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(UpsampleMap, MonotoneAlongColumns) {
  const Image up = upsample_map(grid_map(2, 2, {0, 1, 0, 1}), 4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 1; x < 4; ++x) EXPECT_GE(up.at(y, x), up.at(y, x - 1));
    EXPECT_FLOAT_EQ(up.at(y, 0), 0.0f);
    EXPECT_FLOAT_EQ(up.at(y, 3), 1.0f);
  }
}

TEST(UpsampleMap, PreservesRangeOnRandomGrids) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = static_cast<int>(rng.integer(1, 8));
    const int cols = static_cast<int>(rng.integer(1, 8));
    std::vector<double> g(rows * cols);
    for (double& v : g) v = rng.uniform();
    const int h = rows + static_cast<int>(rng.integer(0, 40));
    const int w = cols + static_cast<int>(rng.integer(0, 40));
    const Image up = upsample_map(grid_map(rows, cols, g), h, w);
    const auto [lo, hi] = std::minmax_element(up.pixels.begin(), up.pixels.end());
    EXPECT_NEAR(*lo, *std::min_element(g.begin(), g.end()), 1e-6);
    EXPECT_NEAR(*hi, *std::max_element(g.begin(), g.end()), 1e-6);
  }
}

TEST(UpsampleMap, RejectsShrinking) {
  EXPECT_THROW(upsample_map(grid_map(4, 4, std::vector<double>(16, 0.0)), 3, 8), Error);
}

}  // namespace
}  // namespace vitreg
