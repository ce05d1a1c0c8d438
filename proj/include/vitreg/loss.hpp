#pragma once

#include <span>
#include <string_view>

namespace vitreg {

enum class LossKind { kL1, kMSE, kSmoothL1, kHuber };

struct LossSpec {
  LossKind kind = LossKind::kL1;
  double delta = 1.0;  // Huber knee; also the SmoothL1 beta

  // Loss of one residual r = prediction − truth.
  double value(double residual) const;
  // d value / d r. The L1 subgradient at r = 0 is 0.
  double derivative(double residual) const;
};

std::string_view loss_kind_name(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// Σ |pred_i − truth_i| over the batch (a sum, not a mean).
double l1_loss(std::span<const double> pred, std::span<const double> truth);
// Σ spec.value(pred_i − truth_i).
double batch_loss(const LossSpec& spec, std::span<const double> pred, std::span<const double> truth);

}  // namespace vitreg
