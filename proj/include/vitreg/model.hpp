#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vitreg/image.hpp"

namespace vitreg {

enum class HeadActivation { kGelu, kIdentity };

// Architecture hyperparameters of the backbone and the regression head.
struct VitConfig {
  int image_height = 224;
  int image_width = 224;
  int channels = 3;
  int patch_size = 16;
  int depth = 12;
  int embed_dim = 192;
  int num_heads = 3;
  int mlp_hidden = 768;
  int fc1_width = 128;
  int num_outputs = 2;
  HeadActivation head_activation = HeadActivation::kGelu;

  // ViT-Tiny backbone at 224×224×3 with a 128-unit head.
  static VitConfig tiny();
  // 32×32 images, 8-pixel patches, 2 layers of width 64.
  static VitConfig toy();

  int grid_height() const { return image_height / patch_size; }
  int grid_width() const { return image_width / patch_size; }
  int num_patches() const { return grid_height() * grid_width(); }
  // Patches plus the prepended CLS token.
  int num_tokens() const { return num_patches() + 1; }
  int patch_dim() const { return patch_size * patch_size * channels; }
  int head_dim() const { return embed_dim / num_heads; }

  // Throws Error(kConfig) on any violated invariant.
  void validate() const;

  bool operator==(const VitConfig&) const = default;
};

inline constexpr float kLayerNormEps = 1e-6f;

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Tensor indices (into ParameterLayout::tensors()) for one encoder layer.
struct EncoderBlockSlots {
  std::size_t ln1_scale, ln1_shift;
  std::size_t query_w, query_b, key_w, key_b, value_w, value_b, out_w, out_b;
  std::size_t ln2_scale, ln2_shift;
  std::size_t mlp_in_w, mlp_in_b, mlp_out_w, mlp_out_b;
};

// All learnable tensors packed into one flat buffer. The order here is the
// on-disk checkpoint order:
//   patch_embed.weight   (P²C × D)
//   cls_token            (1 × D)
//   pos_embed            ((N+1) × D)
//   blocks.{l}.{ln1.scale, ln1.shift, attn.query.weight, attn.query.bias,
//               attn.key.weight, attn.key.bias, attn.value.weight,
//               attn.value.bias, attn.out.weight, attn.out.bias, ln2.scale,
//               ln2.shift, mlp.fc1.weight, mlp.fc1.bias, mlp.fc2.weight,
//               mlp.fc2.bias}                      for l = 0..L-1
//   final_norm.scale, final_norm.shift
//   head.fc1.weight (D × F), head.fc1.bias, head.fc2.weight (F × 2), head.fc2.bias
// Weight matrices are stored row-major as (in × out): y = x·W + b.
class ParameterLayout {
 public:
  explicit ParameterLayout(const VitConfig& config);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& operator[](std::size_t index) const { return tensors_[index]; }
  std::size_t total_size() const { return total_; }
  // Index of a tensor by name; throws Error(kArgument) when absent.
  std::size_t find(std::string_view name) const;

  std::size_t patch_embed = 0;
  std::size_t cls_token = 0;
  std::size_t pos_embed = 0;
  std::vector<EncoderBlockSlots> blocks;
  std::size_t final_scale = 0;
  std::size_t final_shift = 0;
  std::size_t head_fc1_w = 0;
  std::size_t head_fc1_b = 0;
  std::size_t head_fc2_w = 0;
  std::size_t head_fc2_b = 0;

 private:
  std::size_t add(std::string name, int rows, int cols);

  std::vector<TensorSpec> tensors_;
  std::size_t total_ = 0;
};

struct VitWeights {
  VitConfig config;
  std::vector<float> values;  // ParameterLayout(config) order

  ParameterLayout layout() const { return ParameterLayout(config); }
  std::span<float> tensor(std::string_view name);
  std::span<const float> tensor(std::string_view name) const;
  // Shapes consistent with config and every entry finite.
  void validate() const;
};

// Linear weights and tokens ~ truncated normal(0.02); biases 0; LN scale 1.
VitWeights init_weights(const VitConfig& config, std::uint64_t seed);

struct ScorePrediction {
  double p_left = 0.0;
  double p_right = 0.0;
  double p_total = 0.0;  // always p_left + p_right
};

// Forward pass over a batch of normalized H×W×C images.
std::vector<ScorePrediction> forward(const VitWeights& weights, std::span<const Image> batch);

// Per-layer attention probabilities of one image: attention[l][h] is a
// row-major (N+1)×(N+1) matrix whose rows are softmax distributions.
struct AttentionCache {
  int num_tokens = 0;
  std::vector<std::vector<std::vector<float>>> attention;
};

ScorePrediction forward_with_attention(const VitWeights& weights, const Image& image,
                                       AttentionCache& cache);

// Receives the sample's prediction and returns dLoss/d(p_left, p_right).
using UpstreamGradient = std::function<std::array<double, 2>(const ScorePrediction&)>;

// Scalar-generic entry points over a flat parameter buffer. Instantiated for
// float (training) and double (gradient checking).
template <class T>
ScorePrediction predict(const VitConfig& config, std::span<const T> params, const Image& image);

// Forward, then backward with the upstream gradient; parameter gradients are
// added into `grad` (same layout as `params`).
template <class T>
ScorePrediction accumulate_gradient(const VitConfig& config, std::span<const T> params,
                                    const Image& image, const UpstreamGradient& upstream,
                                    std::span<T> grad);

// Throws Error(kShape) unless the image matches config dimensions and is finite.
void check_input(const VitConfig& config, const Image& image);

}  // namespace vitreg
