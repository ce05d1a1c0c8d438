#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace vitreg {

enum class OptimizerKind { kSGD, kAdam, kAdamW, kAdadelta, kRMSprop };

std::string_view optimizer_kind_name(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

// Hyperparameters follow the usual deep-learning framework defaults.
struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kSGD;
  double learning_rate = 1e-3;
  double momentum = 0.9;       // SGD only
  double weight_decay = 0.0;   // L2 for SGD/Adam/Adadelta/RMSprop; decoupled for AdamW
  double beta1 = 0.9;          // Adam, AdamW
  double beta2 = 0.999;        // Adam, AdamW
  double rho = 0.9;            // Adadelta
  double alpha = 0.99;         // RMSprop smoothing
  double eps = 1e-8;           // Adam/AdamW/RMSprop; Adadelta uses 1e-6 if eps is left at 1e-8
};

// Updates a flat parameter buffer in place from its gradient.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<float> params, std::span<const float> grad) = 0;
  long long steps() const { return steps_; }

 protected:
  long long steps_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, std::size_t num_params);

}  // namespace vitreg
