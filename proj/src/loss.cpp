#include "vitreg/loss.hpp"

#include <cmath>
#include <string>

#include "vitreg/error.hpp"

namespace vitreg {

double LossSpec::value(double r) const {
  const double a = std::abs(r);
  switch (kind) {
    case LossKind::kL1:
      return a;
    case LossKind::kMSE:
      return r * r;
    case LossKind::kSmoothL1:
      return a < delta ? 0.5 * r * r / delta : a - 0.5 * delta;
    case LossKind::kHuber:
      return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
  }
  return a;
}

double LossSpec::derivative(double r) const {
  const double sign = (r > 0.0) - (r < 0.0);
  switch (kind) {
    case LossKind::kL1:
      return sign;
    case LossKind::kMSE:
      return 2.0 * r;
    case LossKind::kSmoothL1:
      return std::abs(r) < delta ? r / delta : sign;
    case LossKind::kHuber:
      return std::abs(r) <= delta ? r : delta * sign;
  }
  return sign;
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kL1: return "L1";
    case LossKind::kMSE: return "MSE";
    case LossKind::kSmoothL1: return "SmoothL1";
    case LossKind::kHuber: return "Huber";
  }
  return "L1";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::kL1, LossKind::kMSE, LossKind::kSmoothL1, LossKind::kHuber}) {
    if (loss_kind_name(k) == name) return k;
  }
  fail(ErrorKind::kConfig, "unknown loss '" + std::string(name) + "'");
}

double batch_loss(const LossSpec& spec, std::span<const double> pred, std::span<const double> truth) {
  require(pred.size() == truth.size(), ErrorKind::kArgument,
          "loss inputs differ in length: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  require(!pred.empty(), ErrorKind::kArgument, "loss of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += spec.value(pred[i] - truth[i]);
  return sum;
}

double l1_loss(std::span<const double> pred, std::span<const double> truth) {
  return batch_loss(LossSpec{LossKind::kL1}, pred, truth);
}

}  // namespace vitreg
