#include "kacq/conformal/conformal.hpp"
#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kacq/error.hpp"

namespace kacq::conformal {

const char* to_string(Mode mode) { return mode == Mode::Standard ? "standard" : "mondrian"; }

namespace {

void check_probs(const Tensor& probs, std::size_t n, const char* what) {
  if (probs.rank() != 2 || probs.dim(1) != 2 || probs.dim(0) != n) {
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(n) +
                     " x 2] probabilities, got " + shape_string(probs.shape()));
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
}

}  // namespace

Calibration calibrate(const Tensor& probs, std::span<const int> labels, Mode mode) {
  if (mode == Mode::Standard) {
    if (labels.empty()) throw ParameterError("calibrate: empty calibration set");
    check_probs(probs, labels.size(), "calibrate");
    Calibration cal;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 0 && labels[i] != 1) throw ParameterError("calibrate: labels must be 0/1");
      const double s = 1.0 - probs.at(i, static_cast<std::size_t>(labels[i]));
      if (!std::isfinite(s)) throw NumericError("calibrate: non-finite score");
      cal.scores.push_back(s);
      cal.categories.push_back(0);
    }
    return cal;
  }
  return calibrate(probs, labels, [](int y, std::span<const double>) { return y; }, 2);
}

Calibration calibrate(const Tensor& probs, std::span<const int> labels, const CategoryFn& category,
                      std::size_t category_count) {
  Calibration cal = calibrate(probs, labels, Mode::Standard);
  cal.mode = Mode::Mondrian;
  cal.category_count = category_count;
  std::vector<std::size_t> counts(category_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = category(labels[i], probs.row(i));
    if (c < 0 || static_cast<std::size_t>(c) >= category_count) {
      throw ParameterError("calibrate: category out of range");
    }
    cal.categories[i] = c;
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < category_count; ++c) {
    if (counts[c] == 0) throw ParameterError("calibrate: Mondrian category " + std::to_string(c) + " is empty");
  }
  return cal;
}

double conformal_quantile(std::vector<double> scores, double alpha) {
  check_alpha(alpha);
  const std::size_t n = scores.size();
  if (n == 0) throw ParameterError("conformal_quantile: no scores");
  const double rank = std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-12);
  if (rank > static_cast<double>(n)) return std::numeric_limits<double>::infinity();
  const auto k = static_cast<std::size_t>(std::max(rank, 1.0)) - 1;
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k), scores.end());
  return scores[k];
}

std::vector<double> threshold(const Calibration& cal, double alpha) {
  check_alpha(alpha);
  if (cal.mode == Mode::Standard) return {conformal_quantile(cal.scores, alpha)};
  std::vector<double> out;
  for (std::size_t c = 0; c < cal.category_count; ++c) {
    std::vector<double> s;
    for (std::size_t i = 0; i < cal.scores.size(); ++i) {
      if (static_cast<std::size_t>(cal.categories[i]) == c) s.push_back(cal.scores[i]);
    }
    out.push_back(conformal_quantile(std::move(s), alpha));
  }
  return out;
}

bool contains(PredictionSet s, int c) { return ((s >> c) & 1u) != 0; }

std::size_t set_size(PredictionSet s) { return static_cast<std::size_t>(__builtin_popcount(s)); }

std::vector<PredictionSet> predict_sets(const Tensor& probs, std::span<const double> thresholds,
                                        const CategoryFn& category) {
  if (probs.rank() != 2 || probs.dim(1) != 2) {
    throw ShapeError("predict_sets: expected [n x 2] probabilities, got " + shape_string(probs.shape()));
  }
  if (thresholds.empty()) throw ParameterError("predict_sets: no thresholds");
  std::vector<PredictionSet> out(probs.dim(0), 0u);
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    for (int c = 0; c < 2; ++c) {
      std::size_t cat = 0;
      if (thresholds.size() > 1) {
        cat = static_cast<std::size_t>(category ? category(c, probs.row(i)) : c);
        if (cat >= thresholds.size()) throw ParameterError("predict_sets: category out of range");
      }
      if (1.0 - probs.at(i, static_cast<std::size_t>(c)) <= thresholds[cat]) out[i] |= 1u << c;
    }
  }
  return out;
}

SetReport evaluate_sets(std::span<const PredictionSet> sets, std::span<const int> labels) {
  if (sets.size() != labels.size()) throw ShapeError("evaluate_sets: length mismatch");
  SetReport r;
  r.n = sets.size();
  if (r.n == 0) return r;
  std::size_t errors = 0, total = 0, singles = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::size_t k = set_size(sets[i]);
    total += k;
    singles += k == 1 ? 1 : 0;
    r.empty_count += k == 0 ? 1 : 0;
    errors += contains(sets[i], labels[i]) ? 0 : 1;
  }
  const double n = static_cast<double>(r.n);
  r.error_rate = static_cast<double>(errors) / n;
  r.avg_set_size = static_cast<double>(total) / n;
  r.singleton_fraction = static_cast<double>(singles) / n;
  return r;
}

ConformalReport run(const Tensor& cal_probs, std::span<const int> cal_labels,
                    const Tensor& test_probs, std::span<const int> test_labels,
                    std::span<const double> alphas, Mode mode) {
  const Calibration cal = calibrate(cal_probs, cal_labels, mode);
  check_probs(test_probs, test_labels.size(), "conformal run");
  ConformalReport report;
  report.mode = mode;
  for (double alpha : alphas) {
    const auto q = threshold(cal, alpha);
    const auto sets = predict_sets(test_probs, q);
    SetReport row = evaluate_sets(sets, test_labels);
    row.alpha = alpha;
    report.rows.push_back(row);
    report.thresholds.push_back(q);
  }
  return report;
}

nlohmann::json ConformalReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nlohmann::json q = nlohmann::json::array();
    for (double v : thresholds[i]) q.push_back(std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v));
    const auto& r = rows[i];
    rows_json.push_back({{"alpha", r.alpha},
                         {"thresholds", q},
                         {"error_rate", r.error_rate},
                         {"coverage", 1.0 - r.error_rate},
                         {"avg_set_size", r.avg_set_size},
                         {"singleton_fraction", r.singleton_fraction},
                         {"empty_count", r.empty_count},
                         {"n", r.n}});
  }
  return {{"mode", to_string(mode)}, {"rows", rows_json}};
}

void write_report_csv(std::ostream& out, const ConformalReport& report) {
  shortest_doubles(out) << "mode,alpha,error_rate,avg_set_size,singleton_fraction,empty_count,n\n";
  for (const auto& r : report.rows) {
    out << to_string(report.mode) << ',' << r.alpha << ',' << r.error_rate << ','
        << r.avg_set_size << ',' << r.singleton_fraction << ',' << r.empty_count << ',' << r.n << '\n';
  }
}

void write_score_histogram_csv(std::ostream& out, const Calibration& cal, std::size_t bins,
                               std::span<const double> alphas) {
  if (bins == 0) throw ParameterError("score histogram: bins must be positive");
  std::vector<std::size_t> counts(bins, 0);
  for (double s : cal.scores) {
    const double c = std::clamp(s, 0.0, 1.0);
    ++counts[std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)))];
  }
  shortest_doubles(out) << "kind,lower,upper,value\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out << "bin," << static_cast<double>(b) / static_cast<double>(bins) << ','
        << static_cast<double>(b + 1) / static_cast<double>(bins) << ',' << counts[b] << '\n';
  }
  for (double alpha : alphas) {
    const auto q = threshold(cal, alpha);
    for (std::size_t c = 0; c < q.size(); ++c) {
      out << "quantile," << alpha << ',' << c << ',';
      if (std::isinf(q[c])) {
        out << "inf";
      } else {
        out << q[c];
      }
      out << '\n';
    }
  }
}

}  // namespace kacq::conformal
