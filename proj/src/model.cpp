#include "vitreg/model.hpp"

#include <cmath>

#include "vit_kernel.hpp"
#include "vitreg/error.hpp"
#include "vitreg/rng.hpp"

namespace vitreg {

VitConfig VitConfig::tiny() { return VitConfig{}; }

VitConfig VitConfig::toy() {
  VitConfig c;
  c.image_height = 32;
  c.image_width = 32;
  c.channels = 3;
  c.patch_size = 8;
  c.depth = 2;
  c.embed_dim = 64;
  c.num_heads = 4;
  c.mlp_hidden = 256;
  c.fc1_width = 128;
  return c;
}

void VitConfig::validate() const {
  auto positive = [](int v, const char* name) {
    require(v > 0, ErrorKind::kConfig, std::string(name) + " must be positive, got " + std::to_string(v));
  };
  positive(image_height, "image_height");
  positive(image_width, "image_width");
  positive(channels, "channels");
  positive(patch_size, "patch_size");
  positive(depth, "depth");
  positive(embed_dim, "embed_dim");
  positive(num_heads, "num_heads");
  positive(mlp_hidden, "mlp_hidden");
  positive(fc1_width, "fc1_width");
  require(image_height % patch_size == 0 && image_width % patch_size == 0, ErrorKind::kConfig,
          "image size " + std::to_string(image_height) + "x" + std::to_string(image_width) +
              " is not divisible by patch_size " + std::to_string(patch_size));
  require(embed_dim % num_heads == 0, ErrorKind::kConfig,
          "embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
              std::to_string(num_heads));
  require(num_outputs == 2, ErrorKind::kConfig, "num_outputs must be 2 (left, right)");
}

ParameterLayout::ParameterLayout(const VitConfig& config) {
  config.validate();
  const int d = config.embed_dim;
  patch_embed = add("patch_embed.weight", config.patch_dim(), d);
  cls_token = add("cls_token", 1, d);
  pos_embed = add("pos_embed", config.num_tokens(), d);
  for (int l = 0; l < config.depth; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    EncoderBlockSlots s{};
    s.ln1_scale = add(p + "ln1.scale", 1, d);
    s.ln1_shift = add(p + "ln1.shift", 1, d);
    s.query_w = add(p + "attn.query.weight", d, d);
    s.query_b = add(p + "attn.query.bias", 1, d);
    s.key_w = add(p + "attn.key.weight", d, d);
    s.key_b = add(p + "attn.key.bias", 1, d);
    s.value_w = add(p + "attn.value.weight", d, d);
    s.value_b = add(p + "attn.value.bias", 1, d);
    s.out_w = add(p + "attn.out.weight", d, d);
    s.out_b = add(p + "attn.out.bias", 1, d);
    s.ln2_scale = add(p + "ln2.scale", 1, d);
    s.ln2_shift = add(p + "ln2.shift", 1, d);
    s.mlp_in_w = add(p + "mlp.fc1.weight", d, config.mlp_hidden);
    s.mlp_in_b = add(p + "mlp.fc1.bias", 1, config.mlp_hidden);
    s.mlp_out_w = add(p + "mlp.fc2.weight", config.mlp_hidden, d);
    s.mlp_out_b = add(p + "mlp.fc2.bias", 1, d);
    blocks.push_back(s);
  }
  final_scale = add("final_norm.scale", 1, d);
  final_shift = add("final_norm.shift", 1, d);
  head_fc1_w = add("head.fc1.weight", d, config.fc1_width);
  head_fc1_b = add("head.fc1.bias", 1, config.fc1_width);
  head_fc2_w = add("head.fc2.weight", config.fc1_width, config.num_outputs);
  head_fc2_b = add("head.fc2.bias", 1, config.num_outputs);
}

std::size_t ParameterLayout::add(std::string name, int rows, int cols) {
  tensors_.push_back({std::move(name), rows, cols, total_});
  total_ += tensors_.back().size();
  return tensors_.size() - 1;
}

std::size_t ParameterLayout::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  fail(ErrorKind::kArgument, "no parameter tensor named '" + std::string(name) + "'");
}

std::span<float> VitWeights::tensor(std::string_view name) {
  const ParameterLayout l = layout();
  const TensorSpec& s = l[l.find(name)];
  return std::span<float>(values).subspan(s.offset, s.size());
}

std::span<const float> VitWeights::tensor(std::string_view name) const {
  const ParameterLayout l = layout();
  const TensorSpec& s = l[l.find(name)];
  return std::span<const float>(values).subspan(s.offset, s.size());
}

void VitWeights::validate() const {
  const ParameterLayout l = layout();
  require(values.size() == l.total_size(), ErrorKind::kShape,
          "weights hold " + std::to_string(values.size()) + " values, config requires " +
              std::to_string(l.total_size()));
  for (const TensorSpec& s : l.tensors()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      require(std::isfinite(values[s.offset + i]), ErrorKind::kShape,
              "non-finite value in tensor '" + s.name + "'");
    }
  }
}

VitWeights init_weights(const VitConfig& config, std::uint64_t seed) {
  const ParameterLayout layout(config);
  VitWeights w{config, std::vector<float>(layout.total_size(), 0.0f)};
  Rng rng(derive_seed(seed, SeedStream::kInit));
  auto ends_with = [](const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (const TensorSpec& s : layout.tensors()) {
    float* data = w.values.data() + s.offset;
    if (ends_with(s.name, ".bias") || ends_with(s.name, ".shift")) continue;
    if (ends_with(s.name, ".scale")) {
      std::fill_n(data, s.size(), 1.0f);
      continue;
    }
    for (std::size_t i = 0; i < s.size(); ++i) data[i] = static_cast<float>(rng.truncated_normal(0.02));
  }
  return w;
}

void check_input(const VitConfig& config, const Image& image) {
  require(image.height == config.image_height && image.width == config.image_width &&
              image.channels == config.channels,
          ErrorKind::kShape,
          "image is " + std::to_string(image.height) + "x" + std::to_string(image.width) + "x" +
              std::to_string(image.channels) + ", model expects " + std::to_string(config.image_height) +
              "x" + std::to_string(config.image_width) + "x" + std::to_string(config.channels));
  require(image.pixels.size() == image.size() &&
              image.pixels.size() == static_cast<std::size_t>(image.height) * image.width * image.channels,
          ErrorKind::kShape, "image buffer size does not match its dimensions");
  for (float v : image.pixels) require(std::isfinite(v), ErrorKind::kShape, "image contains non-finite values");
}

namespace {

template <class T>
ScorePrediction to_prediction(const std::array<T, 2>& out) {
  ScorePrediction p;
  p.p_left = static_cast<double>(out[0]);
  p.p_right = static_cast<double>(out[1]);
  p.p_total = p.p_left + p.p_right;
  return p;
}

}  // namespace

template <class T>
ScorePrediction predict(const VitConfig& config, std::span<const T> params, const Image& image) {
  const ParameterLayout layout(config);
  require(params.size() == layout.total_size(), ErrorKind::kShape, "parameter buffer size mismatch");
  check_input(config, image);
  detail::Tape<T> tape;
  detail::VitKernel<T>(config, layout, params.data()).forward(image, tape);
  return to_prediction(tape.output);
}

template <class T>
ScorePrediction accumulate_gradient(const VitConfig& config, std::span<const T> params,
                                    const Image& image, const UpstreamGradient& upstream,
                                    std::span<T> grad) {
  const ParameterLayout layout(config);
  require(params.size() == layout.total_size() && grad.size() == params.size(), ErrorKind::kShape,
          "parameter/gradient buffer size mismatch");
  check_input(config, image);
  detail::VitKernel<T> kernel(config, layout, params.data());
  detail::Tape<T> tape;
  kernel.forward(image, tape);
  const ScorePrediction prediction = to_prediction(tape.output);
  const std::array<double, 2> d = upstream(prediction);
  kernel.backward(tape, {static_cast<T>(d[0]), static_cast<T>(d[1])}, grad.data());
  return prediction;
}

template ScorePrediction predict<float>(const VitConfig&, std::span<const float>, const Image&);
template ScorePrediction predict<double>(const VitConfig&, std::span<const double>, const Image&);
template ScorePrediction accumulate_gradient<float>(const VitConfig&, std::span<const float>, const Image&,
                                                    const UpstreamGradient&, std::span<float>);
template ScorePrediction accumulate_gradient<double>(const VitConfig&, std::span<const double>, const Image&,
                                                     const UpstreamGradient&, std::span<double>);

std::vector<ScorePrediction> forward(const VitWeights& weights, std::span<const Image> batch) {
  const ParameterLayout layout(weights.config);
  require(weights.values.size() == layout.total_size(), ErrorKind::kShape, "weights do not match config");
  for (const Image& image : batch) check_input(weights.config, image);
  detail::VitKernel<float> kernel(weights.config, layout, weights.values.data());
  std::vector<ScorePrediction> out;
  out.reserve(batch.size());
  detail::Tape<float> tape;
  for (const Image& image : batch) {
    kernel.forward(image, tape);
    out.push_back(to_prediction(tape.output));
  }
  return out;
}

ScorePrediction forward_with_attention(const VitWeights& weights, const Image& image, AttentionCache& cache) {
  const ParameterLayout layout(weights.config);
  require(weights.values.size() == layout.total_size(), ErrorKind::kShape, "weights do not match config");
  check_input(weights.config, image);
  detail::Tape<float> tape;
  detail::VitKernel<float>(weights.config, layout, weights.values.data()).forward(image, tape);
  cache.num_tokens = weights.config.num_tokens();
  cache.attention.clear();
  for (const auto& block : tape.blocks) {
    auto& layer = cache.attention.emplace_back();
    for (const auto& p : block.probs) layer.emplace_back(p.data(), p.data() + p.size());
  }
  return to_prediction(tape.output);
}

}  // namespace vitreg
