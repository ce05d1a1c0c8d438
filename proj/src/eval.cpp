#include "vitreg/eval.hpp"

#include <algorithm>
#include <cmath>

#include "vitreg/error.hpp"
#include "vitreg/train.hpp"

namespace vitreg {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth, std::size_t min_n, const char* what) {
  require(pred.size() == truth.size(), ErrorKind::kArgument,
          std::string(what) + " inputs differ in length: " + std::to_string(pred.size()) + " vs " +
              std::to_string(truth.size()));
  require(pred.size() >= min_n, ErrorKind::kArgument,
          std::string(what) + " needs at least " + std::to_string(min_n) + " values");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double pearson(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "pearson");
  const double n = static_cast<double>(pred.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mx += truth[i];
    my += pred[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = truth[i] - mx;
    const double dy = pred[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::kEvaluation, "Pearson correlation undefined: zero variance");
  const double r = (sxy / n) / (std::sqrt(sxx / n) * std::sqrt(syy / n));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<CmcPoint> cmc(std::span<const double> abs_errors, std::span<const double> thresholds) {
  require(std::is_sorted(thresholds.begin(), thresholds.end()), ErrorKind::kArgument,
          "CMC thresholds must be sorted ascending");
  require(!abs_errors.empty(), ErrorKind::kArgument, "CMC of an empty error list");
  std::vector<double> sorted(abs_errors.begin(), abs_errors.end());
  for (double& e : sorted) e = std::abs(e);
  std::sort(sorted.begin(), sorted.end());
  std::vector<CmcPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto within = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.push_back({t, static_cast<double>(within) / static_cast<double>(sorted.size())});
  }
  return out;
}

std::vector<double> cmc_thresholds(double max, double step) {
  require(step > 0.0 && max >= 0.0, ErrorKind::kArgument, "CMC grid needs step > 0 and max >= 0");
  std::vector<double> t;
  const auto count = static_cast<long long>(std::floor(max / step + 1e-9));
  for (long long i = 0; i <= count; ++i) t.push_back(static_cast<double>(i) * step);
  return t;
}

std::vector<HistogramBin> error_histogram(std::span<const double> abs_errors, int bins) {
  require(bins >= 1, ErrorKind::kArgument, "histogram needs at least one bin");
  double hi = 0.0;
  for (double e : abs_errors) hi = std::max(hi, std::abs(e));
  if (hi == 0.0) hi = 1.0;
  const double width = hi / bins;
  std::vector<HistogramBin> out(bins);
  for (int b = 0; b < bins; ++b) {
    out[b].low = b * width;
    out[b].high = b + 1 == bins ? hi : (b + 1) * width;
  }
  for (double e : abs_errors) {
    const double a = std::abs(e);
    int b = static_cast<int>(std::floor(a / width));
    b = std::clamp(b, 0, bins - 1);
    // Bin edges are computed as b·width; settle floating-point disagreements with them.
    while (b > 0 && a < out[b].low) --b;
    while (b + 1 < bins && a >= out[b + 1].low) ++b;
    ++out[b].count;
  }
  return out;
}

EvalReport build_report(std::vector<PredictionRecord> predictions, const EvalOptions& options) {
  require(!predictions.empty(), ErrorKind::kArgument, "evaluation needs a non-empty test set");
  EvalReport r;
  r.n = predictions.size();
  std::vector<double> p, y, err;
  for (const PredictionRecord& rec : predictions) {
    p.push_back(rec.p_total);
    y.push_back(rec.y_true);
    err.push_back(std::abs(rec.p_total - rec.y_true));
  }
  r.mae = mae(p, y);
  if (r.n >= 2) {
    try {
      r.pearson = pearson(p, y);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEvaluation) throw;
    }
  }
  r.cmc = cmc(err, options.cmc_thresholds);
  r.histogram = error_histogram(err, options.histogram_bins);
  r.predictions = std::move(predictions);
  return r;
}

EvalReport evaluate(const Predictor& predictor, const std::vector<CxrSample>& test_set, const EvalOptions& options) {
  require(!test_set.empty(), ErrorKind::kArgument, "evaluation needs a non-empty test set");
  std::vector<PredictionRecord> records;
  records.reserve(test_set.size());
  for (const CxrSample& s : test_set) {
    const ScorePrediction p = predictor(s);
    records.push_back({s.source_id, s.score_total, p.p_total, p.p_left, p.p_right});
  }
  return build_report(std::move(records), options);
}

EvalReport evaluate(const VitWeights& weights, const std::vector<CxrSample>& test_set,
                    const PreprocessConfig& preprocess, const EvalOptions& options) {
  require(!test_set.empty(), ErrorKind::kArgument, "evaluation needs a non-empty test set");
  const auto preds = predict_samples(weights, test_set, preprocess);
  std::size_t i = 0;
  return evaluate([&](const CxrSample&) { return preds[i++]; }, test_set, options);
}

}  // namespace vitreg
