#include "kacq/metrics/metrics.hpp"
#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "kacq/error.hpp"

namespace kacq::metrics {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

void check_binary(std::span<const int> v, const char* what) {
  for (int x : v) {
    if (x != 0 && x != 1) throw ParameterError(std::string(what) + ": labels must be 0 or 1");
  }
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> preds) {
  check_lengths(labels.size(), preds.size(), "confusion");
  check_binary(labels, "confusion");
  check_binary(preds, "confusion");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      (preds[i] == 1 ? cm.tp : cm.fn)++;
    } else {
      (preds[i] == 1 ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

MacroScores macro_scores(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  const double p1 = ratio(tp, tp + fp), r1 = ratio(tp, tp + fn);
  const double p0 = ratio(tn, tn + fn), r0 = ratio(tn, tn + fp);
  const double f1 = ratio(2.0 * p1 * r1, p1 + r1), f0 = ratio(2.0 * p0 * r0, p0 + r0);
  MacroScores s;
  s.precision = (p0 + p1) / 2.0;
  s.recall = (r0 + r1) / 2.0;
  s.f1 = (f0 + f1) / 2.0;
  s.accuracy = ratio(tp + tn, static_cast<double>(cm.total()));
  return s;
}

double accuracy(std::span<const int> labels, std::span<const int> preds) {
  check_lengths(labels.size(), preds.size(), "accuracy");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == preds[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "roc_auc");
  check_binary(labels, "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks with ties sharing twice their average rank (kept integral).
  long double rank_sum2 = 0.0L;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const long double twice_avg = static_cast<long double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum2 += twice_avg;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ParameterError("roc_auc: both classes must be present");
  const long double u2 = rank_sum2 - static_cast<long double>(n_pos) * (n_pos + 1);
  return static_cast<double>(u2 / (2.0L * n_pos * n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "roc_curve");
  check_binary(labels, "roc_curve");
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ParameterError("roc_curve: both classes must be present");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp)++;
      ++j;
    }
    curve.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  return curve;
}

double mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

double kappa(const ConfusionMatrix& cm) {
  const double n = static_cast<double>(cm.total());
  if (n == 0.0) return 0.0;
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  const double po = (tp + tn) / n;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  if (pe == 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> probs,
                                              std::span<const int> labels, std::size_t bins) {
  check_lengths(probs.size(), labels.size(), "calibration_curve");
  check_binary(labels, "calibration_curve");
  if (bins == 0) throw ParameterError("calibration_curve: bins must be positive");
  std::vector<double> sum_p(bins, 0.0), sum_y(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("calibration_curve: probability outside [0, 1]");
    const std::size_t b = std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
    sum_p[b] += p;
    sum_y[b] += labels[i];
    ++count[b];
  }
  std::vector<CalibrationBin> out;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double c = static_cast<double>(count[b]);
    out.push_back({sum_p[b] / c, sum_y[b] / c, count[b]});
  }
  return out;
}

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels, double tau) {
  check_lengths(scores.size(), labels.size(), "evaluate");
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > tau ? 1 : 0;
  MetricsReport r;
  r.confusion = confusion(labels, preds);
  const MacroScores m = macro_scores(r.confusion);
  r.ma_precision = m.precision;
  r.ma_recall = m.recall;
  r.ma_f1 = m.f1;
  r.accuracy = m.accuracy;
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  const bool both = pos > 0 && static_cast<std::size_t>(pos) < labels.size();
  r.roc_auc = both ? roc_auc(scores, labels) : std::numeric_limits<double>::quiet_NaN();
  r.mcc = mcc(r.confusion);
  r.kappa = kappa(r.confusion);
  return r;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

nlohmann::json to_json(const MetricsReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"maP", r.ma_precision}, {"maR", r.ma_recall}, {"maF1", r.ma_f1},
          {"accuracy", r.accuracy}, {"roc_auc", num(r.roc_auc)}, {"mcc", r.mcc},
          {"kappa", r.kappa},       {"confusion", to_json(r.confusion)}};
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& curve) {
  shortest_doubles(out) << "threshold,fpr,tpr\n";
  for (const auto& p : curve) {
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << ',' << p.fpr << ',' << p.tpr << '\n';
  }
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationBin>& curve) {
  shortest_doubles(out) << "mean_predicted,fraction_positive,count\n";
  for (const auto& b : curve) out << b.mean_predicted << ',' << b.fraction_positive << ',' << b.count << '\n';
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ParameterError("summarize: empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), "paired_t_test");
  const std::size_t k = a.size();
  if (k < 2) throw ParameterError("paired_t_test: need at least 2 pairs");
  std::vector<double> d(k);
  for (std::size_t i = 0; i < k; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  if (!(sd > 0.0)) throw NumericError("paired_t_test: differences have zero variance");
  TTestResult r;
  r.df = k - 1;
  r.mean_diff = mean;
  r.sd_diff = sd;
  r.t = mean / (sd / std::sqrt(static_cast<double>(k)));
  const double df = static_cast<double>(r.df);
  r.p = incomplete_beta(df / 2.0, 0.5, df / (df + r.t * r.t));
  r.cohens_d = mean / sd;
  return r;
}

double bonferroni_alpha(double alpha, std::size_t comparisons) {
  if (comparisons == 0) throw ParameterError("bonferroni_alpha: comparisons must be positive");
  return alpha / static_cast<double>(comparisons);
}

nlohmann::json to_json(const TTestResult& r) {
  return {{"t", r.t}, {"p", r.p}, {"cohens_d", r.cohens_d}, {"df", r.df},
          {"mean_diff", r.mean_diff}, {"sd_diff", r.sd_diff}};
}

}  // namespace kacq::metrics
