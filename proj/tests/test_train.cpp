#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "vitreg/data.hpp"
#include "vitreg/error.hpp"
#include "vitreg/loss.hpp"
#include "vitreg/optimizer.hpp"
#include "vitreg/train.hpp"

namespace vitreg {
namespace {

TEST(Loss, ClosedFormsAroundTheKnee) {
  const LossSpec l1{LossKind::kL1}, mse{LossKind::kMSE}, smooth{LossKind::kSmoothL1, 1.0}, huber{LossKind::kHuber, 1.0};
  for (double s : {1.0, -1.0}) {
    EXPECT_DOUBLE_EQ(l1.value(0.5 * s), 0.5);
    EXPECT_DOUBLE_EQ(l1.value(2 * s), 2.0);
    EXPECT_DOUBLE_EQ(mse.value(0.5 * s), 0.25);
    EXPECT_DOUBLE_EQ(mse.value(2 * s), 4.0);
    EXPECT_DOUBLE_EQ(smooth.value(0.5 * s), 0.125);
    EXPECT_DOUBLE_EQ(smooth.value(2 * s), 1.5);
    EXPECT_DOUBLE_EQ(huber.value(0.5 * s), 0.125);
    EXPECT_DOUBLE_EQ(huber.value(2 * s), 1.5);
  }
  const LossSpec smooth2{LossKind::kSmoothL1, 2.0}, huber2{LossKind::kHuber, 2.0};
  EXPECT_DOUBLE_EQ(smooth2.value(1.0), 0.25);
  EXPECT_DOUBLE_EQ(smooth2.value(3.0), 2.0);
  EXPECT_DOUBLE_EQ(huber2.value(1.0), 0.5);
  EXPECT_DOUBLE_EQ(huber2.value(3.0), 4.0);
}

TEST(Loss, NonNegativeZeroAtIdentityAndDerivative) {
  Rng rng(1);
  for (LossKind k : {LossKind::kL1, LossKind::kMSE, LossKind::kSmoothL1, LossKind::kHuber}) {
    const LossSpec spec{k, 0.7};
    EXPECT_EQ(spec.value(0.0), 0.0);
    EXPECT_EQ(spec.derivative(0.0), 0.0);
    for (int i = 0; i < 200; ++i) {
      const double r = rng.uniform(-5, 5);
      EXPECT_GE(spec.value(r), 0.0);
      if (std::abs(std::abs(r) - 0.7) < 1e-3 || std::abs(r) < 1e-3) continue;
      const double h = 1e-6;
      EXPECT_NEAR(spec.derivative(r), (spec.value(r + h) - spec.value(r - h)) / (2 * h), 1e-5);
    }
    EXPECT_EQ(parse_loss_kind(loss_kind_name(k)), k);
  }
  EXPECT_THROW(parse_loss_kind("hinge"), Error);
}

TEST(Loss, BatchSum) {
  const std::vector<double> p{1, 2}, t{3, 1};
  EXPECT_EQ(l1_loss(p, t), 3.0);
  EXPECT_EQ(l1_loss(t, t), 0.0);
  const std::vector<double> p2{-1, 3};  // residuals doubled
  EXPECT_EQ(l1_loss(p2, t), 6.0);
  try {
    l1_loss(std::vector<double>{1, 2, 3}, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kArgument);
  }
  EXPECT_THROW(l1_loss(std::vector<double>{}, std::vector<double>{}), Error);
}

// y = w·x + b trained with L1 on one sample, stepped by hand.
TEST(Optimizer, SgdMatchesHandSteppedLinearModel) {
  for (double momentum : {0.0, 0.9}) {
    OptimizerSpec spec;
    spec.learning_rate = 0.1;
    spec.momentum = momentum;
    auto opt = make_optimizer(spec, 2);
    std::vector<float> params{0.5f, -0.25f};
    const double x = 2.0, y = 10.0;
    double w = 0.5, b = -0.25, vw = 0, vb = 0;
    for (int step = 0; step < 5; ++step) {
      const double r = params[0] * x + params[1] - y;
      const double s = r > 0 ? 1.0 : -1.0;
      const std::vector<float> grad{static_cast<float>(s * x), static_cast<float>(s)};
      opt->step(params, grad);

      const double gw = s * x, gb = s;
      vw = step == 0 ? gw : momentum * vw + gw;
      vb = step == 0 ? gb : momentum * vb + gb;
      w -= spec.learning_rate * (momentum == 0 ? gw : vw);
      b -= spec.learning_rate * (momentum == 0 ? gb : vb);
      EXPECT_NEAR(params[0], w, 1e-6);
      EXPECT_NEAR(params[1], b, 1e-6);
    }
  }
}

TEST(Optimizer, FirstStepClosedForms) {
  auto first = [](OptimizerSpec spec, float p0 = 1.0f, float grad = 0.5f) {
    auto opt = make_optimizer(spec, 1);
    std::vector<float> p{p0};
    opt->step(p, std::vector<float>{grad});
    return static_cast<double>(p[0]);
  };
  OptimizerSpec s;
  s.learning_rate = 0.01;
  s.kind = OptimizerKind::kAdam;
  EXPECT_NEAR(first(s), 1.0 - 0.01, 1e-7);
  s.kind = OptimizerKind::kRMSprop;
  EXPECT_NEAR(first(s), 1.0 - 0.01 * 0.5 / (std::sqrt(0.01 * 0.25) + 1e-8), 1e-6);
  s.kind = OptimizerKind::kAdadelta;
  s.learning_rate = 1.0;
  EXPECT_NEAR(first(s), 1.0 - std::sqrt(1e-6) / std::sqrt(0.1 * 0.25 + 1e-6) * 0.5, 1e-7);
  s.kind = OptimizerKind::kAdamW;
  s.learning_rate = 0.1;
  s.weight_decay = 0.5;
  EXPECT_NEAR(first(s, 2.0f, 0.0f), 2.0 * (1 - 0.05), 1e-6);
  s.kind = OptimizerKind::kSGD;
  s.weight_decay = 0.1;
  EXPECT_NEAR(first(s, 2.0f, 0.0f), 2.0 - 0.1 * 0.2, 1e-6);
  for (OptimizerKind k : {OptimizerKind::kSGD, OptimizerKind::kAdam, OptimizerKind::kAdamW, OptimizerKind::kAdadelta,
                          OptimizerKind::kRMSprop}) {
    EXPECT_EQ(parse_optimizer_kind(optimizer_kind_name(k)), k);
  }
  EXPECT_THROW(parse_optimizer_kind("lbfgs"), Error);
  auto opt = make_optimizer(OptimizerSpec{}, 3);
  std::vector<float> p(2);
  EXPECT_THROW(opt->step(p, std::vector<float>(2)), Error);
}

VitConfig toy32_gray() {
  VitConfig c = VitConfig::toy();
  c.channels = 1;
  c.embed_dim = 32;
  c.mlp_hidden = 64;
  c.fc1_width = 32;
  return c;
}

PreprocessConfig pre_for(const VitConfig& c) {
  PreprocessConfig p;
  p.target_height = c.image_height;
  p.target_width = c.image_width;
  p.channels = c.channels;
  return p;
}

TEST(Train, ZeroLearningRateLeavesWeightsUnchanged) {
  const VitConfig c = toy32_gray();
  const auto data = synth_dataset(24, SynthOptions{32, 32}, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.optimizer.learning_rate = 0.0;
  const VitWeights w0 = init_weights(c, 3);
  const TrainResult r = train(w0, data, {}, cfg, pre_for(c));
  EXPECT_EQ(r.final_weights.values, w0.values);
  ASSERT_EQ(r.trace.epochs.size(), 3u);
  for (const EpochRecord& e : r.trace.epochs) EXPECT_EQ(e.train_loss, r.trace.epochs[0].train_loss);
  EXPECT_FALSE(r.trace.epochs[0].val_mae.has_value());
  EXPECT_EQ(r.best_epoch, 3);
}

TEST(Train, DeterministicTraceAndWeights) {
  const VitConfig c = toy32_gray();
  const auto data = synth_dataset(40, SynthOptions{32, 32}, 4);
  const std::vector<CxrSample> tr(data.begin(), data.begin() + 30), va(data.begin() + 30, data.end());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 17;
  cfg.online_cutmix = true;
  cfg.offline_replacement = true;
  for (int threads : {1, 3}) {
    cfg.threads = threads;
    SCOPED_TRACE(threads);
    const TrainResult a = train(init_weights(c, 1), tr, va, cfg, pre_for(c));
    const TrainResult b = train(init_weights(c, 1), tr, va, cfg, pre_for(c));
    EXPECT_EQ(a.final_weights.values, b.final_weights.values);
    EXPECT_EQ(a.best_weights.values, b.best_weights.values);
    ASSERT_EQ(a.trace.epochs.size(), b.trace.epochs.size());
    for (std::size_t i = 0; i < a.trace.epochs.size(); ++i) {
      EXPECT_EQ(a.trace.epochs[i].train_loss, b.trace.epochs[i].train_loss);
      EXPECT_EQ(a.trace.epochs[i].val_mae, b.trace.epochs[i].val_mae);
      EXPECT_EQ(a.trace.epochs[i].val_pc, b.trace.epochs[i].val_pc);
    }
  }
}

TEST(Train, LossDecreasesOnLearnableData) {
  VitConfig c = VitConfig::toy();
  c.channels = 1;
  const auto data = synth_dataset(200, SynthOptions{32, 32}, 8);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 5;
  const TrainResult r = train(init_weights(c, 5), data, {}, cfg, pre_for(c));
  std::vector<double> losses;
  for (const EpochRecord& e : r.trace.epochs) losses.push_back(e.train_loss);
  EXPECT_LT(losses.back(), losses.front());
  auto median5 = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[2];
  };
  EXPECT_LT(median5({losses.end() - 5, losses.end()}), median5({losses.begin(), losses.begin() + 5}));
}

TEST(Train, BestWeightsTrackValidationMae) {
  const VitConfig c = toy32_gray();
  const auto data = synth_dataset(60, SynthOptions{32, 32}, 9);
  const std::vector<CxrSample> tr(data.begin(), data.begin() + 45), va(data.begin() + 45, data.end());
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  const TrainResult r = train(init_weights(c, 2), tr, va, cfg, pre_for(c));
  double best = 1e300;
  int best_epoch = 0;
  for (const EpochRecord& e : r.trace.epochs) {
    ASSERT_TRUE(e.val_mae.has_value());
    if (*e.val_mae < best) {
      best = *e.val_mae;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  std::vector<double> p, y;
  const auto preds = predict_samples(r.best_weights, va, pre_for(c));
  double sum = 0;
  for (std::size_t i = 0; i < va.size(); ++i) sum += std::abs(preds[i].p_total - va[i].score_total);
  EXPECT_NEAR(sum / va.size(), best, 1e-12);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostics) {
  const VitConfig c = toy32_gray();
  const auto data = synth_dataset(8, SynthOptions{32, 32}, 1);
  TrainConfig cfg;
  cfg.loss.kind = LossKind::kMSE;
  cfg.optimizer.learning_rate = 1e30;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  try {
    train(init_weights(c, 1), data, {}, cfg, pre_for(c));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTraining);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("lr 1e+30"), std::string::npos) << msg;
  }
}

TEST(Train, ConfigAndInputErrors) {
  const VitConfig c = toy32_gray();
  const auto data = synth_dataset(4, SynthOptions{32, 32}, 1);
  auto kind = [&](TrainConfig cfg, std::vector<CxrSample> set, PreprocessConfig pre) {
    try {
      train(init_weights(c, 1), set, {}, cfg, pre);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_EQ(kind(bad, data, pre_for(c)), ErrorKind::kConfig);
  bad = {};
  bad.epochs = 0;
  EXPECT_EQ(kind(bad, data, pre_for(c)), ErrorKind::kConfig);
  bad = {};
  bad.optimizer.learning_rate = -1;
  EXPECT_EQ(kind(bad, data, pre_for(c)), ErrorKind::kConfig);
  EXPECT_EQ(kind(TrainConfig{}, {}, pre_for(c)), ErrorKind::kArgument);
  PreprocessConfig wrong = pre_for(c);
  wrong.target_height = 64;
  EXPECT_EQ(kind(TrainConfig{}, data, wrong), ErrorKind::kConfig);
  TrainConfig rep;
  rep.offline_replacement = true;
  auto no_lungs = data;
  no_lungs[1].score_left.reset();
  no_lungs[1].score_right.reset();
  EXPECT_EQ(kind(rep, no_lungs, pre_for(c)), ErrorKind::kAugmentation);
}

}  // namespace
}  // namespace vitreg
