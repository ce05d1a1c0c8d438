#pragma once

// Straight-line single-image ViT forward in double precision, written with
// plain loops over named tensors. Used as an independent oracle for the
// library's Eigen kernel.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vitreg/image.hpp"
#include "vitreg/model.hpp"

namespace vitreg::testing {

using Rows = std::vector<std::vector<double>>;

class ReferenceVit {
 public:
  explicit ReferenceVit(const VitWeights& w) : w_(w), c_(w.config), layout_(w.config) {}

  std::array<double, 2> forward(const Image& img) const {
    const int p = c_.patch_size, ch = c_.channels, d = c_.embed_dim;
    const int gh = c_.grid_height(), gw = c_.grid_width();
    const int n = c_.num_tokens();

    Rows z(n, std::vector<double>(d));
    for (int j = 0; j < d; ++j) z[0][j] = at("cls_token", 0, j) + at("pos_embed", 0, j);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const int t = 1 + gy * gw + gx;
        for (int j = 0; j < d; ++j) {
          double acc = at("pos_embed", t, j);
          for (int py = 0; py < p; ++py) {
            for (int px = 0; px < p; ++px) {
              for (int k = 0; k < ch; ++k) {
                const int row = (py * p + px) * ch + k;
                acc += img.at(gy * p + py, gx * p + px, k) * at("patch_embed.weight", row, j);
              }
            }
          }
          z[t][j] = acc;
        }
      }
    }

    for (int l = 0; l < c_.depth; ++l) {
      const std::string b = "blocks." + std::to_string(l) + ".";
      const Rows x1 = layer_norm(z, b + "ln1.scale", b + "ln1.shift");
      const Rows q = linear(x1, b + "attn.query.weight", b + "attn.query.bias");
      const Rows k = linear(x1, b + "attn.key.weight", b + "attn.key.bias");
      const Rows v = linear(x1, b + "attn.value.weight", b + "attn.value.bias");
      const Rows ctx = attention(q, k, v);
      const Rows proj = linear(ctx, b + "attn.out.weight", b + "attn.out.bias");
      for (int t = 0; t < n; ++t) {
        for (int j = 0; j < d; ++j) z[t][j] += proj[t][j];
      }
      const Rows x2 = layer_norm(z, b + "ln2.scale", b + "ln2.shift");
      Rows h = linear(x2, b + "mlp.fc1.weight", b + "mlp.fc1.bias");
      for (auto& r : h) {
        for (double& e : r) e = gelu(e);
      }
      const Rows m = linear(h, b + "mlp.fc2.weight", b + "mlp.fc2.bias");
      for (int t = 0; t < n; ++t) {
        for (int j = 0; j < d; ++j) z[t][j] += m[t][j];
      }
    }

    const Rows cls = layer_norm(Rows{z[0]}, "final_norm.scale", "final_norm.shift");
    Rows hidden = linear(cls, "head.fc1.weight", "head.fc1.bias");
    if (c_.head_activation == HeadActivation::kGelu) {
      for (double& e : hidden[0]) e = gelu(e);
    }
    const Rows out = linear(hidden, "head.fc2.weight", "head.fc2.bias");
    return {out[0][0], out[0][1]};
  }

 private:
  const TensorSpec& spec(const std::string& name) const { return layout_[layout_.find(name)]; }

  double at(const std::string& name, int r, int col) const {
    const TensorSpec& t = spec(name);
    return w_.values[t.offset + static_cast<std::size_t>(r) * t.cols + col];
  }

  int rows_of(const std::string& name) const { return spec(name).rows; }
  int cols_of(const std::string& name) const { return spec(name).cols; }

  static double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

  Rows layer_norm(const Rows& x, const std::string& scale, const std::string& shift) const {
    Rows y = x;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double dim = static_cast<double>(x[t].size());
      double mean = 0;
      for (double e : x[t]) mean += e;
      mean /= dim;
      double var = 0;
      for (double e : x[t]) var += (e - mean) * (e - mean);
      var /= dim;
      const double inv = 1.0 / std::sqrt(var + static_cast<double>(kLayerNormEps));
      for (std::size_t j = 0; j < x[t].size(); ++j) {
        y[t][j] = (x[t][j] - mean) * inv * at(scale, 0, static_cast<int>(j)) + at(shift, 0, static_cast<int>(j));
      }
    }
    return y;
  }

  Rows linear(const Rows& x, const std::string& weight, const std::string& bias) const {
    const int in = rows_of(weight), out = cols_of(weight);
    Rows y(x.size(), std::vector<double>(out));
    for (std::size_t t = 0; t < x.size(); ++t) {
      for (int o = 0; o < out; ++o) {
        double acc = at(bias, 0, o);
        for (int i = 0; i < in; ++i) acc += x[t][i] * at(weight, i, o);
        y[t][o] = acc;
      }
    }
    return y;
  }

  Rows attention(const Rows& q, const Rows& k, const Rows& v) const {
    const int n = static_cast<int>(q.size());
    const int dh = c_.head_dim();
    Rows ctx(n, std::vector<double>(c_.embed_dim, 0.0));
    for (int h = 0; h < c_.num_heads; ++h) {
      for (int i = 0; i < n; ++i) {
        std::vector<double> s(n);
        double mx = -1e300;
        for (int j = 0; j < n; ++j) {
          double dot = 0;
          for (int e = 0; e < dh; ++e) dot += q[i][h * dh + e] * k[j][h * dh + e];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        double sum = 0;
        for (double& e : s) sum += (e = std::exp(e - mx));
        for (int j = 0; j < n; ++j) {
          for (int e = 0; e < dh; ++e) ctx[i][h * dh + e] += s[j] / sum * v[j][h * dh + e];
        }
      }
    }
    return ctx;
  }

  const VitWeights& w_;
  const VitConfig& c_;
  ParameterLayout layout_;
};

}  // namespace vitreg::testing
