#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vitreg/augment.hpp"
#include "vitreg/data.hpp"
#include "vitreg/loss.hpp"
#include "vitreg/model.hpp"
#include "vitreg/optimizer.hpp"
#include "vitreg/sample.hpp"

namespace vitreg {

struct TrainConfig {
  LossSpec loss;
  OptimizerSpec optimizer;  // carries the learning rate
  int batch_size = 32;
  int epochs = 60;
  std::uint64_t seed = 0;
  bool online_cutmix = false;
  CutMixParams cutmix;
  bool offline_replacement = false;
  bool shuffle = true;
  // Worker threads for per-sample gradients inside a batch. Results are
  // reproducible for a fixed thread count; 1 is the reference mode.
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;              // 1-based
  double train_loss = 0.0;    // per-sample mean of the configured loss
  std::optional<double> val_mae;
  std::optional<double> val_pc;  // empty when undefined (zero variance)
  double seconds = 0.0;       // wall time of the epoch
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  VitWeights final_weights;
  VitWeights best_weights;  // lowest validation MAE; final weights when no validation set
  int best_epoch = 0;
  TrainTrace trace;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training of p_total against score_total. Each step applies the
// optimizer to the gradient of the batch-summed loss. Samples are raw [0,1]
// images; they are resized once, augmented per batch and then normalized.
// Throws Error(kTraining) when a batch loss becomes non-finite.
TrainResult train(VitWeights initial, const std::vector<CxrSample>& train_set,
                  const std::vector<CxrSample>& val_set, const TrainConfig& cfg,
                  const PreprocessConfig& preprocess, const EpochCallback& on_epoch = {});

// Predictions of `weights` on raw samples after preprocessing.
std::vector<ScorePrediction> predict_samples(const VitWeights& weights, const std::vector<CxrSample>& samples,
                                             const PreprocessConfig& preprocess);

}  // namespace vitreg
