#include "vitreg/optimizer.hpp"

#include <cmath>
#include <string>

#include "vitreg/error.hpp"

namespace vitreg {

std::string_view optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSGD: return "SGD";
    case OptimizerKind::kAdam: return "Adam";
    case OptimizerKind::kAdamW: return "AdamW";
    case OptimizerKind::kAdadelta: return "Adadelta";
    case OptimizerKind::kRMSprop: return "RMSprop";
  }
  return "SGD";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  for (OptimizerKind k : {OptimizerKind::kSGD, OptimizerKind::kAdam, OptimizerKind::kAdamW,
                          OptimizerKind::kAdadelta, OptimizerKind::kRMSprop}) {
    if (optimizer_kind_name(k) == name) return k;
  }
  fail(ErrorKind::kConfig, "unknown optimizer '" + std::string(name) + "'");
}

namespace {

void check_sizes(std::span<float> params, std::span<const float> grad, std::size_t expected) {
  require(params.size() == expected && grad.size() == expected, ErrorKind::kShape,
          "optimizer buffer size mismatch");
}

class Sgd final : public Optimizer {
 public:
  Sgd(const OptimizerSpec& s, std::size_t n) : spec_(s), velocity_(n, 0.0) {}

  void step(std::span<float> params, std::span<const float> grad) override {
    check_sizes(params, grad, velocity_.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grad[i] + spec_.weight_decay * params[i];
      if (spec_.momentum != 0.0) {
        velocity_[i] = steps_ == 0 ? g : spec_.momentum * velocity_[i] + g;
        g = velocity_[i];
      }
      params[i] = static_cast<float>(params[i] - spec_.learning_rate * g);
    }
    ++steps_;
  }

 private:
  OptimizerSpec spec_;
  std::vector<double> velocity_;
};

class Adam final : public Optimizer {
 public:
  Adam(const OptimizerSpec& s, std::size_t n, bool decoupled)
      : spec_(s), decoupled_(decoupled), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<float> params, std::span<const float> grad) override {
    check_sizes(params, grad, m_.size());
    ++steps_;
    const double c1 = 1.0 - std::pow(spec_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(spec_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double p = params[i];
      double g = grad[i];
      if (decoupled_) {
        p *= 1.0 - spec_.learning_rate * spec_.weight_decay;
      } else {
        g += spec_.weight_decay * p;
      }
      m_[i] = spec_.beta1 * m_[i] + (1.0 - spec_.beta1) * g;
      v_[i] = spec_.beta2 * v_[i] + (1.0 - spec_.beta2) * g * g;
      p -= spec_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + spec_.eps);
      params[i] = static_cast<float>(p);
    }
  }

 private:
  OptimizerSpec spec_;
  bool decoupled_;
  std::vector<double> m_, v_;
};

class Adadelta final : public Optimizer {
 public:
  Adadelta(const OptimizerSpec& s, std::size_t n)
      : spec_(s), eps_(s.eps == 1e-8 ? 1e-6 : s.eps), square_avg_(n, 0.0), delta_avg_(n, 0.0) {}

  void step(std::span<float> params, std::span<const float> grad) override {
    check_sizes(params, grad, square_avg_.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + spec_.weight_decay * params[i];
      square_avg_[i] = spec_.rho * square_avg_[i] + (1.0 - spec_.rho) * g * g;
      const double delta = std::sqrt(delta_avg_[i] + eps_) / std::sqrt(square_avg_[i] + eps_) * g;
      delta_avg_[i] = spec_.rho * delta_avg_[i] + (1.0 - spec_.rho) * delta * delta;
      params[i] = static_cast<float>(params[i] - spec_.learning_rate * delta);
    }
    ++steps_;
  }

 private:
  OptimizerSpec spec_;
  double eps_;
  std::vector<double> square_avg_, delta_avg_;
};

class RmsProp final : public Optimizer {
 public:
  RmsProp(const OptimizerSpec& s, std::size_t n) : spec_(s), square_avg_(n, 0.0) {}

  void step(std::span<float> params, std::span<const float> grad) override {
    check_sizes(params, grad, square_avg_.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + spec_.weight_decay * params[i];
      square_avg_[i] = spec_.alpha * square_avg_[i] + (1.0 - spec_.alpha) * g * g;
      params[i] = static_cast<float>(params[i] - spec_.learning_rate * g / (std::sqrt(square_avg_[i]) + spec_.eps));
    }
    ++steps_;
  }

 private:
  OptimizerSpec spec_;
  std::vector<double> square_avg_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, std::size_t num_params) {
  require(spec.learning_rate >= 0.0, ErrorKind::kConfig, "learning rate must be non-negative");
  switch (spec.kind) {
    case OptimizerKind::kSGD: return std::make_unique<Sgd>(spec, num_params);
    case OptimizerKind::kAdam: return std::make_unique<Adam>(spec, num_params, false);
    case OptimizerKind::kAdamW: return std::make_unique<Adam>(spec, num_params, true);
    case OptimizerKind::kAdadelta: return std::make_unique<Adadelta>(spec, num_params);
    case OptimizerKind::kRMSprop: return std::make_unique<RmsProp>(spec, num_params);
  }
  fail(ErrorKind::kConfig, "unknown optimizer");
}

}  // namespace vitreg
