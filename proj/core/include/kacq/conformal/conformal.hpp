#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/ndcore/tensor.hpp"

namespace kacq::conformal {

enum class Mode { Standard, Mondrian };

/// Nonconformity scores s_i = 1 - p_i(y_i) of a calibration set. Under Mondrian each
/// score carries a category (the true class unless a category function is supplied).
struct Calibration {
  Mode mode = Mode::Standard;
  std::vector<double> scores;
  std::vector<int> categories;
  std::size_t category_count = 1;
};

/// Category of an instance given its candidate class and its row of probabilities.
using CategoryFn = std::function<int(int candidate_class, std::span<const double> probs)>;

/// probs is [n x 2] with row sums not required to be one; labels are 0/1. Throws for an
/// empty calibration set or an empty Mondrian category.
Calibration calibrate(const Tensor& probs, std::span<const int> labels, Mode mode = Mode::Standard);
/// Mondrian calibration over a custom taxonomy; category(y_i, probs_i) for each instance.
Calibration calibrate(const Tensor& probs, std::span<const int> labels, const CategoryFn& category,
                      std::size_t category_count);

/// The ceil((n + 1)(1 - alpha))-th smallest score, or +infinity when that rank exceeds n.
double conformal_quantile(std::vector<double> scores, double alpha);

/// One threshold for Standard; one per category for Mondrian.
std::vector<double> threshold(const Calibration& cal, double alpha);

/// Bit c of a set is class c.
using PredictionSet = unsigned;

bool contains(PredictionSet s, int c);
std::size_t set_size(PredictionSet s);

/// Class c enters the set iff 1 - p(c) <= q (the candidate's category threshold under
/// Mondrian). `category` defaults to the candidate class itself.
std::vector<PredictionSet> predict_sets(const Tensor& probs, std::span<const double> thresholds,
                                        const CategoryFn& category = {});

struct SetReport {
  double alpha = 0.0;
  double error_rate = 0.0;
  double avg_set_size = 0.0;
  double singleton_fraction = 0.0;
  std::size_t empty_count = 0;
  std::size_t n = 0;
};

SetReport evaluate_sets(std::span<const PredictionSet> sets, std::span<const int> labels);

struct ConformalReport {
  Mode mode = Mode::Standard;
  std::vector<SetReport> rows;
  std::vector<std::vector<double>> thresholds;  // per alpha

  nlohmann::json to_json() const;
};

/// Calibrate once, then threshold, predict and evaluate for every alpha.
ConformalReport run(const Tensor& cal_probs, std::span<const int> cal_labels,
                    const Tensor& test_probs, std::span<const int> test_labels,
                    std::span<const double> alphas, Mode mode);

void write_report_csv(std::ostream& out, const ConformalReport& report);
/// Histogram of calibration scores on [0, 1] with the threshold of each alpha.
void write_score_histogram_csv(std::ostream& out, const Calibration& cal, std::size_t bins,
                               std::span<const double> alphas);

const char* to_string(Mode mode);

}  // namespace kacq::conformal
