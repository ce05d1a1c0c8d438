#pragma once

// Scalar-generic ViT regressor kernel: forward pass with an activation tape
// and the matching reverse pass. Internal to the library.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "vitreg/image.hpp"
#include "vitreg/model.hpp"

namespace vitreg::detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <class T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using ConstMatMap = Eigen::Map<const Mat<T>>;
template <class T>
using MatMap = Eigen::Map<Mat<T>>;
template <class T>
using ConstRowMap = Eigen::Map<const RowVec<T>>;
template <class T>
using RowMap = Eigen::Map<RowVec<T>>;

template <class T>
using AlignedBuffer = std::vector<T, Eigen::aligned_allocator<T>>;

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <class T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <class T>
struct BlockTape {
  Mat<T> input;  // z_{l-1}
  Mat<T> xhat1;
  ColVec<T> rstd1;
  Mat<T> normed1;
  Mat<T> query, key, value;
  std::vector<Mat<T>> probs;  // one (N+1)×(N+1) softmax matrix per head
  Mat<T> context;
  Mat<T> xhat2;
  ColVec<T> rstd2;
  Mat<T> normed2;
  Mat<T> hidden_pre;
  Mat<T> hidden_act;
};

template <class T>
struct Tape {
  Mat<T> patches;  // N × P²C
  std::vector<BlockTape<T>> blocks;
  RowVec<T> final_xhat;
  T final_rstd = T(0);
  RowVec<T> cls_normed;
  RowVec<T> head_pre;
  RowVec<T> head_act;
  std::array<T, 2> output{};
  AlignedBuffer<T> grad;  // padded scratch for one backward pass
};

template <class T>
class VitKernel {
 public:
  // Parameters are copied into per-tensor aligned slots. Eigen chooses its
  // SIMD peeling from the runtime address, so reading straight from the
  // caller's buffer made results depend on where malloc happened to land.
  VitKernel(const VitConfig& config, const ParameterLayout& layout, const T* params)
      : config_(config), layout_(layout) {
    std::size_t at = 0;
    for (const TensorSpec& s : layout_.tensors()) {
      slots_.push_back(at);
      at += (s.size() + kPad - 1) / kPad * kPad;
    }
    params_.assign(at, T(0));
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const TensorSpec& s = layout_[i];
      std::copy(params + s.offset, params + s.offset + s.size(), params_.begin() + slots_[i]);
    }
  }

  void forward(const Image& image, Tape<T>& tape) const {
    const int n_tok = config_.num_tokens();
    const int d = config_.embed_dim;

    extract_patches(image, tape.patches);

    Mat<T> z(n_tok, d);
    z.row(0) = row(layout_.cls_token) + mat(layout_.pos_embed).row(0);
    z.bottomRows(n_tok - 1).noalias() = tape.patches * mat(layout_.patch_embed);
    z.bottomRows(n_tok - 1) += mat(layout_.pos_embed).bottomRows(n_tok - 1);

    tape.blocks.resize(layout_.blocks.size());
    for (std::size_t l = 0; l < layout_.blocks.size(); ++l) {
      block_forward(layout_.blocks[l], z, tape.blocks[l]);
    }

    // Final LN is only needed on the CLS row.
    const RowVec<T> cls = z.row(0);
    const T mean = cls.mean();
    const RowVec<T> centered = cls.array() - mean;
    tape.final_rstd = T(1) / std::sqrt(centered.squaredNorm() / T(d) + T(kLayerNormEps));
    tape.final_xhat = centered * tape.final_rstd;
    tape.cls_normed = tape.final_xhat.cwiseProduct(row(layout_.final_scale)) + row(layout_.final_shift);

    tape.head_pre.noalias() = tape.cls_normed * mat(layout_.head_fc1_w);
    tape.head_pre += row(layout_.head_fc1_b);
    tape.head_act = tape.head_pre;
    if (config_.head_activation == HeadActivation::kGelu) {
      tape.head_act = tape.head_pre.unaryExpr([](T x) { return gelu(x); });
    }
    RowVec<T> out = tape.head_act * mat(layout_.head_fc2_w);
    out += row(layout_.head_fc2_b);
    tape.output = {out(0), out(1)};
  }

  // Adds dLoss/dθ into `grad` given dLoss/d(p_left, p_right).
  void backward(Tape<T>& tape, std::array<T, 2> d_output, T* out) const {
    tape.grad.assign(params_.size(), T(0));
    T* grad = tape.grad.data();
    backward_padded(tape, d_output, grad);
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const TensorSpec& s = layout_[i];
      const T* src = grad + slots_[i];
      T* dst = out + s.offset;
      for (std::size_t k = 0; k < s.size(); ++k) dst[k] += src[k];
    }
  }

 private:
  static constexpr std::size_t kPad = 16;

  void backward_padded(const Tape<T>& tape, std::array<T, 2> d_output, T* grad) const {
    const int n_tok = config_.num_tokens();
    const int d = config_.embed_dim;

    RowVec<T> d_out(2);
    d_out << d_output[0], d_output[1];
    gmat(grad, layout_.head_fc2_w).noalias() += tape.head_act.transpose() * d_out;
    grow(grad, layout_.head_fc2_b) += d_out;
    RowVec<T> d_head = d_out * mat(layout_.head_fc2_w).transpose();
    if (config_.head_activation == HeadActivation::kGelu) {
      for (Eigen::Index i = 0; i < d_head.size(); ++i) d_head(i) *= gelu_derivative(tape.head_pre(i));
    }
    gmat(grad, layout_.head_fc1_w).noalias() += tape.cls_normed.transpose() * d_head;
    grow(grad, layout_.head_fc1_b) += d_head;
    const RowVec<T> d_cls_normed = d_head * mat(layout_.head_fc1_w).transpose();

    grow(grad, layout_.final_scale) += d_cls_normed.cwiseProduct(tape.final_xhat);
    grow(grad, layout_.final_shift) += d_cls_normed;
    const RowVec<T> d_xhat = d_cls_normed.cwiseProduct(row(layout_.final_scale));
    const T mean_dx = d_xhat.mean();
    const T mean_dx_xhat = d_xhat.cwiseProduct(tape.final_xhat).mean();

    Mat<T> dz = Mat<T>::Zero(n_tok, d);
    dz.row(0) = tape.final_rstd * (d_xhat.array() - mean_dx - tape.final_xhat.array() * mean_dx_xhat).matrix();

    for (std::size_t l = layout_.blocks.size(); l-- > 0;) {
      block_backward(layout_.blocks[l], tape.blocks[l], dz, grad);
    }

    gmat(grad, layout_.pos_embed) += dz;
    grow(grad, layout_.cls_token) += dz.row(0);
    gmat(grad, layout_.patch_embed).noalias() += tape.patches.transpose() * dz.bottomRows(n_tok - 1);
  }

  ConstMatMap<T> mat(std::size_t index) const {
    const TensorSpec& s = layout_[index];
    return ConstMatMap<T>(params_.data() + slots_[index], s.rows, s.cols);
  }
  ConstRowMap<T> row(std::size_t index) const {
    const TensorSpec& s = layout_[index];
    return ConstRowMap<T>(params_.data() + slots_[index], static_cast<Eigen::Index>(s.size()));
  }
  MatMap<T> gmat(T* grad, std::size_t index) const {
    const TensorSpec& s = layout_[index];
    return MatMap<T>(grad + slots_[index], s.rows, s.cols);
  }
  RowMap<T> grow(T* grad, std::size_t index) const {
    const TensorSpec& s = layout_[index];
    return RowMap<T>(grad + slots_[index], static_cast<Eigen::Index>(s.size()));
  }

  void extract_patches(const Image& image, Mat<T>& patches) const {
    const int p = config_.patch_size;
    const int c = config_.channels;
    const int gw = config_.grid_width();
    const int row_len = p * c;
    patches.resize(config_.num_patches(), config_.patch_dim());
    for (int gy = 0; gy < config_.grid_height(); ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        T* dst = patches.row(gy * gw + gx).data();
        for (int py = 0; py < p; ++py) {
          const float* src = image.pixels.data() + image.index(gy * p + py, gx * p, 0);
          for (int i = 0; i < row_len; ++i) dst[py * row_len + i] = static_cast<T>(src[i]);
        }
      }
    }
  }

  void layer_norm(const Mat<T>& x, std::size_t scale, std::size_t shift, Mat<T>& xhat,
                  ColVec<T>& rstd, Mat<T>& y) const {
    const Eigen::Index d = x.cols();
    xhat.resize(x.rows(), d);
    rstd.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const T mean = x.row(r).mean();
      xhat.row(r) = x.row(r).array() - mean;
      rstd(r) = T(1) / std::sqrt(xhat.row(r).squaredNorm() / T(d) + T(kLayerNormEps));
      xhat.row(r) *= rstd(r);
    }
    y = (xhat.array().rowwise() * row(scale).array()).rowwise() + row(shift).array();
  }

  // Returns dLoss/dx for y = LN(x); accumulates scale/shift gradients.
  Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const ColVec<T>& rstd,
                             std::size_t scale, std::size_t shift, T* grad) const {
    grow(grad, scale) += dy.cwiseProduct(xhat).colwise().sum();
    grow(grad, shift) += dy.colwise().sum();
    const Mat<T> d_xhat = dy.array().rowwise() * row(scale).array();
    Mat<T> dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const T mean_d = d_xhat.row(r).mean();
      const T mean_dx = d_xhat.row(r).cwiseProduct(xhat.row(r)).mean();
      dx.row(r) = rstd(r) * (d_xhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx).matrix();
    }
    return dx;
  }

  void block_forward(const EncoderBlockSlots& s, Mat<T>& z, BlockTape<T>& t) const {
    const int heads = config_.num_heads;
    const int dh = config_.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));

    t.input = z;
    layer_norm(z, s.ln1_scale, s.ln1_shift, t.xhat1, t.rstd1, t.normed1);
    t.query.noalias() = t.normed1 * mat(s.query_w);
    t.query.rowwise() += row(s.query_b);
    t.key.noalias() = t.normed1 * mat(s.key_w);
    t.key.rowwise() += row(s.key_b);
    t.value.noalias() = t.normed1 * mat(s.value_w);
    t.value.rowwise() += row(s.value_b);

    t.probs.resize(heads);
    t.context.resize(z.rows(), z.cols());
    for (int h = 0; h < heads; ++h) {
      Mat<T>& p = t.probs[h];
      p.noalias() = t.query.middleCols(h * dh, dh) * t.key.middleCols(h * dh, dh).transpose();
      p *= scale;
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const T m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
      }
      t.context.middleCols(h * dh, dh).noalias() = p * t.value.middleCols(h * dh, dh);
    }
    z.noalias() += t.context * mat(s.out_w);
    z.rowwise() += row(s.out_b);

    layer_norm(z, s.ln2_scale, s.ln2_shift, t.xhat2, t.rstd2, t.normed2);
    t.hidden_pre.noalias() = t.normed2 * mat(s.mlp_in_w);
    t.hidden_pre.rowwise() += row(s.mlp_in_b);
    t.hidden_act = t.hidden_pre.unaryExpr([](T x) { return gelu(x); });
    z.noalias() += t.hidden_act * mat(s.mlp_out_w);
    z.rowwise() += row(s.mlp_out_b);
  }

  // dz enters as dLoss/dz_l and leaves as dLoss/dz_{l-1}.
  void block_backward(const EncoderBlockSlots& s, const BlockTape<T>& t, Mat<T>& dz, T* grad) const {
    const int heads = config_.num_heads;
    const int dh = config_.head_dim();
    const T scale = T(1) / std::sqrt(T(dh));

    // MLP branch: z_l = z'_l + MLP(LN(z'_l))
    gmat(grad, s.mlp_out_w).noalias() += t.hidden_act.transpose() * dz;
    grow(grad, s.mlp_out_b) += dz.colwise().sum();
    Mat<T> d_hidden = dz * mat(s.mlp_out_w).transpose();
    d_hidden = d_hidden.cwiseProduct(t.hidden_pre.unaryExpr([](T x) { return gelu_derivative(x); }));
    gmat(grad, s.mlp_in_w).noalias() += t.normed2.transpose() * d_hidden;
    grow(grad, s.mlp_in_b) += d_hidden.colwise().sum();
    const Mat<T> d_normed2 = d_hidden * mat(s.mlp_in_w).transpose();
    dz += layer_norm_backward(d_normed2, t.xhat2, t.rstd2, s.ln2_scale, s.ln2_shift, grad);

    // Attention branch: z'_l = z_{l-1} + MSA(LN(z_{l-1}))
    gmat(grad, s.out_w).noalias() += t.context.transpose() * dz;
    grow(grad, s.out_b) += dz.colwise().sum();
    const Mat<T> d_context = dz * mat(s.out_w).transpose();

    Mat<T> d_query(t.query.rows(), t.query.cols());
    Mat<T> d_key(t.key.rows(), t.key.cols());
    Mat<T> d_value(t.value.rows(), t.value.cols());
    for (int h = 0; h < heads; ++h) {
      const Mat<T>& p = t.probs[h];
      const auto dctx = d_context.middleCols(h * dh, dh);
      Mat<T> d_probs = dctx * t.value.middleCols(h * dh, dh).transpose();
      d_value.middleCols(h * dh, dh).noalias() = p.transpose() * dctx;
      const ColVec<T> row_dot = d_probs.cwiseProduct(p).rowwise().sum();
      Mat<T> d_scores = p.cwiseProduct((d_probs.colwise() - row_dot));
      d_scores *= scale;
      d_query.middleCols(h * dh, dh).noalias() = d_scores * t.key.middleCols(h * dh, dh);
      d_key.middleCols(h * dh, dh).noalias() = d_scores.transpose() * t.query.middleCols(h * dh, dh);
    }

    gmat(grad, s.query_w).noalias() += t.normed1.transpose() * d_query;
    grow(grad, s.query_b) += d_query.colwise().sum();
    gmat(grad, s.key_w).noalias() += t.normed1.transpose() * d_key;
    grow(grad, s.key_b) += d_key.colwise().sum();
    gmat(grad, s.value_w).noalias() += t.normed1.transpose() * d_value;
    grow(grad, s.value_b) += d_value.colwise().sum();

    Mat<T> d_normed1 = d_query * mat(s.query_w).transpose();
    d_normed1.noalias() += d_key * mat(s.key_w).transpose();
    d_normed1.noalias() += d_value * mat(s.value_w).transpose();
    dz += layer_norm_backward(d_normed1, t.xhat1, t.rstd1, s.ln1_scale, s.ln1_shift, grad);
  }

  const VitConfig& config_;
  const ParameterLayout& layout_;
  std::vector<std::size_t> slots_;
  AlignedBuffer<T> params_;
};

}  // namespace vitreg::detail
