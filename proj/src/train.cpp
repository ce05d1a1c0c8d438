#include "vitreg/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "vit_kernel.hpp"
#include "vitreg/error.hpp"
#include "vitreg/eval.hpp"
#include "vitreg/rng.hpp"

namespace vitreg {

void TrainConfig::validate() const {
  require(optimizer.learning_rate >= 0.0 && std::isfinite(optimizer.learning_rate), ErrorKind::kConfig,
          "learning_rate must be finite and non-negative");
  require(batch_size >= 1, ErrorKind::kConfig, "batch_size must be >= 1");
  require(epochs >= 1, ErrorKind::kConfig, "epochs must be >= 1");
  require(threads >= 1, ErrorKind::kConfig, "threads must be >= 1");
  require(loss.delta > 0.0, ErrorKind::kConfig, "loss_delta must be positive");
  if (online_cutmix) {
    try {
      cutmix.validate();
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
  }
}

namespace {

std::vector<CxrSample> to_model_resolution(const std::vector<CxrSample>& samples, const PreprocessConfig& pre) {
  std::vector<CxrSample> out;
  out.reserve(samples.size());
  for (const CxrSample& s : samples) {
    CxrSample r = s;
    r.image = resize_to_model(s.image, pre);
    out.push_back(std::move(r));
  }
  return out;
}

// Forward + backward of one normalized image, gradient added into `grad`.
double sample_step(const detail::VitKernel<float>& kernel, detail::Tape<float>& tape, const Image& image,
                   double target, const LossSpec& loss, float* grad) {
  kernel.forward(image, tape);
  const double p_total = static_cast<double>(tape.output[0]) + static_cast<double>(tape.output[1]);
  const double r = p_total - target;
  const auto d = static_cast<float>(loss.derivative(r));
  kernel.backward(tape, {d, d}, grad);
  return loss.value(r);
}

}  // namespace

std::vector<ScorePrediction> predict_samples(const VitWeights& weights, const std::vector<CxrSample>& samples,
                                             const PreprocessConfig& preprocess) {
  std::vector<Image> batch;
  batch.reserve(samples.size());
  for (const CxrSample& s : samples) batch.push_back(vitreg::preprocess(s, preprocess));
  return forward(weights, batch);
}

TrainResult train(VitWeights initial, const std::vector<CxrSample>& train_set, const std::vector<CxrSample>& val_set,
                  const TrainConfig& cfg, const PreprocessConfig& preprocess, const EpochCallback& on_epoch) {
  cfg.validate();
  preprocess.validate();
  initial.validate();
  require(!train_set.empty(), ErrorKind::kArgument, "training set is empty");
  const VitConfig& mc = initial.config;
  require(preprocess.target_height == mc.image_height && preprocess.target_width == mc.image_width &&
              preprocess.channels == mc.channels,
          ErrorKind::kConfig, "preprocess output does not match the model input size");

  std::vector<CxrSample> samples = to_model_resolution(train_set, preprocess);
  if (cfg.offline_replacement) samples = expand_dataset(samples, cfg.seed);
  const std::vector<CxrSample> val = to_model_resolution(val_set, preprocess);

  TrainResult result;
  result.final_weights = std::move(initial);
  VitWeights& w = result.final_weights;
  const ParameterLayout layout(mc);
  const std::size_t n_params = layout.total_size();
  auto optimizer = make_optimizer(cfg.optimizer, n_params);

  const int threads = cfg.threads;
  std::vector<std::vector<float>> grads(threads, std::vector<float>(n_params));
  std::vector<detail::Tape<float>> tapes(threads);

  std::optional<double> best_mae;
  const std::size_t n = samples.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<double> sample_loss(n);
  std::vector<Image> inputs;
  std::vector<double> targets;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, SeedStream::kShuffle, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(std::span<std::size_t>(order));
    }

    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const detail::VitKernel<float> kernel(mc, layout, w.values.data());
      const std::size_t count = std::min(batch, n - start);
      inputs.clear();
      targets.clear();
      if (cfg.online_cutmix) {
        Rng rng(derive_seed(cfg.seed, SeedStream::kCutMix, (static_cast<std::uint64_t>(epoch) << 32) | b));
        const auto partner = rng.permutation(count);
        for (std::size_t i = 0; i < count; ++i) {
          CutMixResult mixed =
              score_cutmix(samples[order[start + i]], samples[order[start + partner[i]]], cfg.cutmix, rng);
          inputs.push_back(std::move(mixed.sample.image));
          targets.push_back(mixed.sample.score_total);
        }
      } else {
        for (std::size_t i = 0; i < count; ++i) {
          inputs.push_back(samples[order[start + i]].image);
          targets.push_back(samples[order[start + i]].score_total);
        }
      }
      for (Image& img : inputs) normalize_in_place(img, preprocess);

      // Contiguous chunks per worker; chunk gradients are summed in worker order.
      const std::size_t workers = std::min<std::size_t>(threads, count);
      auto run_chunk = [&](std::size_t t) {
        std::fill(grads[t].begin(), grads[t].end(), 0.0f);
        const std::size_t lo = count * t / workers;
        const std::size_t hi = count * (t + 1) / workers;
        for (std::size_t i = lo; i < hi; ++i) {
          sample_loss[order[start + i]] =
              sample_step(kernel, tapes[t], inputs[i], targets[i], cfg.loss, grads[t].data());
        }
      };
      if (workers == 1) {
        run_chunk(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run_chunk, t);
        run_chunk(0);
        for (auto& th : pool) th.join();
        for (std::size_t t = 1; t < workers; ++t) {
          for (std::size_t k = 0; k < n_params; ++k) grads[0][k] += grads[t][k];
        }
      }

      double batch_loss = 0.0;
      for (std::size_t i = 0; i < count; ++i) batch_loss += sample_loss[order[start + i]];
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << b + 1 << " (lr "
            << cfg.optimizer.learning_rate << ")";
        fail(ErrorKind::kTraining, msg.str());
      }
      optimizer->step(w.values, grads[0]);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double total = 0.0;
    for (double l : sample_loss) total += l;
    rec.train_loss = total / static_cast<double>(n);
    if (!val.empty()) {
      const auto preds = predict_samples(w, val, preprocess);
      std::vector<double> p, y;
      for (std::size_t i = 0; i < val.size(); ++i) {
        p.push_back(preds[i].p_total);
        y.push_back(val[i].score_total);
      }
      rec.val_mae = mae(p, y);
      try {
        rec.val_pc = pearson(p, y);
      } catch (const Error&) {
        rec.val_pc.reset();
      }
      if (!best_mae || *rec.val_mae < *best_mae) {
        best_mae = rec.val_mae;
        result.best_weights = w;
        result.best_epoch = epoch;
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (!best_mae) {
    result.best_weights = w;
    result.best_epoch = cfg.epochs;
  }
  return result;
}

}  // namespace vitreg
