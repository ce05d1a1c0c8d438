#include <gtest/gtest.h>

#include <cmath>

#include "vitreg/config_json.hpp"
#include "vitreg/error.hpp"
#include "vitreg/eval.hpp"
#include "vitreg/rng.hpp"

namespace vitreg {
namespace {

// Textbook sample-statistics Pearson in long double. Uses n-1 normalization,
// which cancels, so it is an independent route to the same value.
double naive_pearson(const std::vector<double>& p, const std::vector<double>& y) {
  const std::size_t n = p.size();
  long double sp = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sp += p[i];
    sy += y[i];
  }
  const long double mp = sp / n, my = sy / n;
  long double cov = 0, vp = 0, vy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (p[i] - mp) * (y[i] - my);
    vp += (p[i] - mp) * (p[i] - mp);
    vy += (y[i] - my) * (y[i] - my);
  }
  cov /= (n - 1);
  vp /= (n - 1);
  vy /= (n - 1);
  return static_cast<double>(cov / std::sqrt(vp * vy));
}

double naive_mae(const std::vector<double>& p, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(static_cast<long double>(p[i]) - y[i]);
  return static_cast<double>(s / p.size());
}

TEST(Metrics, MatchNaiveOraclesOnRandomVectors) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(0, 8);
      p[i] = y[i] + rng.uniform(-2, 2);
    }
    EXPECT_NEAR(mae(p, y), naive_mae(p, y), 1e-10);
    EXPECT_NEAR(pearson(p, y), naive_pearson(p, y), 1e-10);
  }
}

TEST(Metrics, KnownValues) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> affine, flipped;
  for (double v : x) {
    affine.push_back(2 * v + 1);
    flipped.push_back(-3 * v + 7);
  }
  EXPECT_NEAR(pearson(affine, x), 1.0, 1e-12);
  EXPECT_NEAR(pearson(flipped, x), -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(mae(affine, x), 3.0);  // |x + 1| averaged over 0..4
  EXPECT_EQ(mae(x, x), 0.0);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 1, 2}, std::vector<double>{1, 1, 2, 2}), 0.0, 1e-15);
}

TEST(Metrics, UndefinedAndMalformedInputs) {
  const std::vector<double> flat{2, 2, 2}, x{1, 2, 3};
  for (const auto& [a, b] : {std::pair{flat, x}, std::pair{x, flat}}) {
    try {
      pearson(a, b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kEvaluation);
    }
  }
  EXPECT_THROW(mae(std::vector<double>{1, 2}, x), Error);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), Error);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Cmc, MonotoneAndBounded) {
  Rng rng(3);
  std::vector<double> err(257);
  for (double& e : err) e = std::abs(rng.normal()) * 2;
  const auto th = cmc_thresholds();
  EXPECT_EQ(th.size(), 33u);
  EXPECT_EQ(th.back(), 8.0);
  const auto curve = cmc(err, th);
  ASSERT_EQ(curve.size(), th.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    EXPECT_GE(curve[i].fraction, 0.0);
    EXPECT_LE(curve[i].fraction, 1.0);
    if (i > 0) EXPECT_GE(curve[i].fraction, curve[i - 1].fraction);
    std::size_t within = 0;
    for (double e : err) within += e <= th[i];
    EXPECT_DOUBLE_EQ(curve[i].fraction, static_cast<double>(within) / err.size());
  }
  const double mx = *std::max_element(err.begin(), err.end());
  EXPECT_EQ(cmc(err, std::vector<double>{mx})[0].fraction, 1.0);
  EXPECT_EQ(cmc(std::vector<double>{0.5}, std::vector<double>{0.25, 0.5})[1].fraction, 1.0);
  EXPECT_THROW(cmc(err, std::vector<double>{1, 0.5}), Error);
}

TEST(Histogram, CountsConservedAndEdgesInclusiveAtTop) {
  Rng rng(5);
  for (int bins : {1, 4, 16, 33}) {
    std::vector<double> err(500);
    for (double& e : err) e = rng.uniform(0, 3);
    err[7] = 0.0;
    const auto h = error_histogram(err, bins);
    ASSERT_EQ(h.size(), static_cast<std::size_t>(bins));
    std::size_t total = 0;
    for (std::size_t b = 0; b < h.size(); ++b) {
      total += h[b].count;
      EXPECT_LT(h[b].low, h[b].high);
      if (b > 0) EXPECT_EQ(h[b].low, h[b - 1].high);
      std::size_t inside = 0;
      for (double e : err) inside += e >= h[b].low && (e < h[b].high || (b + 1 == h.size() && e <= h[b].high));
      EXPECT_EQ(h[b].count, inside);
    }
    EXPECT_EQ(total, err.size());
    EXPECT_EQ(h.front().low, 0.0);
    EXPECT_EQ(h.back().high, *std::max_element(err.begin(), err.end()));
  }
  const auto zeros = error_histogram(std::vector<double>(4, 0.0), 3);
  EXPECT_EQ(zeros[0].count, 4u);
  EXPECT_THROW(error_histogram(std::vector<double>{1}, 0), Error);
}

TEST(Report, BuildAndJsonRoundTrip) {
  std::vector<PredictionRecord> recs{
      {"a", 1, 1.5, 0.5, 1.0}, {"b", 3, 2.0, 1.0, 1.0}, {"c", 6, 6.25, 3.0, 3.25}, {"d", 0, 0.1, 0.05, 0.05}};
  const EvalReport r = build_report(recs);
  EXPECT_EQ(r.n, 4u);
  EXPECT_DOUBLE_EQ(r.mae, (0.5 + 1.0 + 0.25 + 0.1) / 4);
  ASSERT_TRUE(r.pearson.has_value());
  const EvalReport back = eval_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.n, r.n);
  EXPECT_EQ(back.mae, r.mae);
  EXPECT_EQ(back.pearson, r.pearson);
  ASSERT_EQ(back.cmc.size(), r.cmc.size());
  for (std::size_t i = 0; i < r.cmc.size(); ++i) EXPECT_EQ(back.cmc[i].fraction, r.cmc[i].fraction);
  ASSERT_EQ(back.histogram.size(), r.histogram.size());
  for (std::size_t i = 0; i < r.histogram.size(); ++i) EXPECT_EQ(back.histogram[i].count, r.histogram[i].count);
  ASSERT_EQ(back.predictions.size(), 4u);
  EXPECT_EQ(back.predictions[2].source_id, "c");
  EXPECT_EQ(back.predictions[2].p_right, 3.25);

  // Constant predictions leave Pearson undefined; the report records null.
  const EvalReport flat = build_report({{"a", 1, 2, 1, 1}, {"b", 3, 2, 1, 1}});
  EXPECT_FALSE(flat.pearson.has_value());
  EXPECT_TRUE(to_json(flat)["pearson"].is_null());
  EXPECT_FALSE(eval_report_from_json(to_json(flat)).pearson.has_value());

  try {
    eval_report_from_json(nlohmann::json{{"n", 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEvaluation);
  }
  EXPECT_THROW(build_report({}), Error);
}

TEST(Report, EvaluateUsesPredictorPerSample) {
  std::vector<CxrSample> test(3);
  for (int i = 0; i < 3; ++i) {
    test[i].source_id = "s" + std::to_string(i);
    test[i].score_total = i;
  }
  const EvalReport r = evaluate(
      [](const CxrSample& s) {
        ScorePrediction p;
        p.p_left = s.score_total;
        p.p_right = 1.0;
        p.p_total = p.p_left + p.p_right;
        return p;
      },
      test);
  EXPECT_DOUBLE_EQ(r.mae, 1.0);
  EXPECT_NEAR(*r.pearson, 1.0, 1e-12);
  EXPECT_EQ(r.predictions[1].source_id, "s1");
}

}  // namespace
}  // namespace vitreg
