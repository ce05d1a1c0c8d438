#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vitreg/data.hpp"
#include "vitreg/model.hpp"
#include "vitreg/sample.hpp"

namespace vitreg {

// Σ|pred_i − truth_i| / n.
double mae(std::span<const double> pred, std::span<const double> truth);

// Population covariance over the product of population standard deviations.
// Throws Error(kEvaluation) when either input has zero variance.
double pearson(std::span<const double> pred, std::span<const double> truth);

struct CmcPoint {
  double threshold = 0.0;
  double fraction = 0.0;  // share of |error| ≤ threshold
};

// Thresholds must be ascending.
std::vector<CmcPoint> cmc(std::span<const double> abs_errors, std::span<const double> thresholds);
std::vector<double> cmc_thresholds(double max = 8.0, double step = 0.25);

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

// `bins` uniform bins over [0, max error], half-open except the last.
std::vector<HistogramBin> error_histogram(std::span<const double> abs_errors, int bins = 16);

struct PredictionRecord {
  std::string source_id;
  double y_true = 0.0;
  double p_total = 0.0;
  double p_left = 0.0;
  double p_right = 0.0;
};

struct EvalOptions {
  std::vector<double> cmc_thresholds = vitreg::cmc_thresholds();
  int histogram_bins = 16;
};

struct EvalReport {
  std::size_t n = 0;
  double mae = 0.0;
  std::optional<double> pearson;  // empty when undefined
  std::vector<CmcPoint> cmc;
  std::vector<HistogramBin> histogram;
  std::vector<PredictionRecord> predictions;
};

using Predictor = std::function<ScorePrediction(const CxrSample&)>;

EvalReport build_report(std::vector<PredictionRecord> predictions, const EvalOptions& options = {});
EvalReport evaluate(const Predictor& predictor, const std::vector<CxrSample>& test_set,
                    const EvalOptions& options = {});
EvalReport evaluate(const VitWeights& weights, const std::vector<CxrSample>& test_set,
                    const PreprocessConfig& preprocess, const EvalOptions& options = {});

}  // namespace vitreg
