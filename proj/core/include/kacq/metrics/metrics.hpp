#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace kacq::metrics {

/// Binary confusion counts with class 1 as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> preds);

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Per-class precision, recall and F1 for both classes, averaged unweighted. A ratio with
/// an empty denominator counts as 0.
MacroScores macro_scores(const ConfusionMatrix& cm);

double accuracy(std::span<const int> labels, std::span<const int> preds);

/// Mann-Whitney form: P(s+ > s-) + P(s+ = s-)/2, via average ranks.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};
/// Threshold sweep over distinct scores (descending), starting at (0, 0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

/// 0 when any factor of the denominator is zero.
double mcc(const ConfusionMatrix& cm);
/// 0 when the chance agreement is 1.
double kappa(const ConfusionMatrix& cm);

struct CalibrationBin {
  double mean_predicted = 0.0;
  double fraction_positive = 0.0;
  std::size_t count = 0;
};
/// Equal-width bins on [0, 1]; the last bin is closed. Empty bins are omitted.
std::vector<CalibrationBin> calibration_curve(std::span<const double> probs,
                                              std::span<const int> labels, std::size_t bins = 10);

struct MetricsReport {
  double ma_precision = 0.0;
  double ma_recall = 0.0;
  double ma_f1 = 0.0;
  double accuracy = 0.0;
  double roc_auc = 0.0;
  double mcc = 0.0;
  double kappa = 0.0;
  ConfusionMatrix confusion;
};

/// Scores are class-1 probabilities; labels are predicted with score > tau. roc_auc is
/// NaN when only one class is present.
MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels,
                       double tau = 0.5);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const ConfusionMatrix& cm);

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& curve);
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationBin>& curve);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
Summary summarize(std::span<const double> values);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// CDF of Student's t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 0.0;  // two-tailed
  double cohens_d = 0.0;
  std::size_t df = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;  // sample standard deviation of the differences
};

/// Paired two-tailed t-test on a - b. Throws ParameterError for k < 2 or mismatched
/// lengths and NumericError when the differences have zero variance.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double bonferroni_alpha(double alpha, std::size_t comparisons);

nlohmann::json to_json(const TTestResult& r);

}  // namespace kacq::metrics
