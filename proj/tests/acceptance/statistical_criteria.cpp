#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "acceptance.hpp"
#include "kacq/conformal/conformal.hpp"
#include "kacq/explain/explain.hpp"
#include "kacq/metrics/metrics.hpp"
#include "kacq/ndcore/rng.hpp"

namespace kacq::acceptance {

namespace {

struct Counts {
  std::size_t agree[2][2] = {{0, 0}, {0, 0}};  // [label][pred]
  std::size_t label_total[2] = {0, 0};
  std::size_t pred_total[2] = {0, 0};
  std::size_t n = 0;
};

Counts count(const std::vector<int>& labels, const std::vector<int>& preds) {
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++c.agree[labels[i]][preds[i]];
    ++c.label_total[labels[i]];
    ++c.pred_total[preds[i]];
    ++c.n;
  }
  return c;
}

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

long double simpson(const std::function<long double(long double)>& f, long double a, long double b,
                    long double fa, long double fm, long double fb, long double whole, long double tol,
                    int depth) {
  const long double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const long double flm = f(lm), frm = f(rm);
  const long double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const long double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * tol) {
    return left + right + (left + right - whole) / 15;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Two-tailed p = I_{df/(df+t^2)}(df/2, 1/2), integrating the beta density with x = u^2.
long double t_pvalue_oracle(long double t, long double df) {
  const long double a = df / 2, b = 0.5L;
  const long double upper = std::sqrt(df / (df + t * t));
  const long double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto f = [&](long double u) {
    if (u <= 0) return a == 0.5L ? 2.0L * std::exp(-log_beta) : 0.0L;
    return 2.0L * std::exp((2 * a - 1) * std::log(u) + (b - 1) * std::log1p(-u * u) - log_beta);
  };
  const long double fa = f(0), fb = f(upper), fm = f(upper / 2);
  const long double whole = upper / 6 * (fa + 4 * fm + fb);
  return simpson(f, 0, upper, fa, fm, fb, whole, 1e-16L * std::fabs(whole), 40);
}

}  // namespace

Outcome metric_oracles() {
  RngStream rng(606);
  std::size_t mismatches = 0;
  std::size_t zero_rows = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    metrics::ConfusionMatrix cm;
    auto draw = [&] { return rng.below(5) == 0 ? 0 : static_cast<std::size_t>(rng.below(60)); };
    cm.tp = draw();
    cm.fp = draw();
    cm.fn = draw();
    cm.tn = draw();
    if (cm.total() == 0) cm.tn = 1;
    std::vector<int> labels, preds;
    auto push = [&](std::size_t k, int y, int p) {
      for (std::size_t i = 0; i < k; ++i) {
        labels.push_back(y);
        preds.push_back(p);
      }
    };
    push(cm.tp, 1, 1);
    push(cm.fp, 0, 1);
    push(cm.fn, 1, 0);
    push(cm.tn, 0, 0);
    const Counts c = count(labels, preds);
    zero_rows += (c.pred_total[0] == 0 || c.pred_total[1] == 0 || c.label_total[0] == 0 || c.label_total[1] == 0);

    double p[2], r[2], f[2];
    for (int k = 0; k < 2; ++k) {
      p[k] = safe_div(static_cast<double>(c.agree[k][k]), static_cast<double>(c.pred_total[k]));
      r[k] = safe_div(static_cast<double>(c.agree[k][k]), static_cast<double>(c.label_total[k]));
      f[k] = safe_div(2.0 * p[k] * r[k], p[k] + r[k]);
    }
    const double n = static_cast<double>(c.n);
    const double acc = static_cast<double>(c.agree[0][0] + c.agree[1][1]) / n;
    const double cov = static_cast<double>(c.agree[1][1]) * static_cast<double>(c.agree[0][0]) -
                       static_cast<double>(c.agree[0][1]) * static_cast<double>(c.agree[1][0]);
    const double den = static_cast<double>(c.pred_total[1]) * static_cast<double>(c.label_total[1]) *
                       static_cast<double>(c.pred_total[0]) * static_cast<double>(c.label_total[0]);
    const double mcc = den == 0.0 ? 0.0 : cov / std::sqrt(den);
    const double pe = (static_cast<double>(c.pred_total[1]) * static_cast<double>(c.label_total[1]) +
                       static_cast<double>(c.pred_total[0]) * static_cast<double>(c.label_total[0])) /
                      (n * n);
    const double kappa = pe == 1.0 ? 0.0 : (acc - pe) / (1.0 - pe);

    const auto got_cm = metrics::confusion(labels, preds);
    const auto s = metrics::macro_scores(got_cm);
    const bool ok = got_cm == cm && s.precision == (p[0] + p[1]) / 2.0 && s.recall == (r[0] + r[1]) / 2.0 &&
                    s.f1 == (f[0] + f[1]) / 2.0 && s.accuracy == acc && metrics::accuracy(labels, preds) == acc &&
                    metrics::mcc(got_cm) == mcc && metrics::kappa(got_cm) == kappa;
    mismatches += ok ? 0 : 1;
  }

  double auc_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
      scores[i] = coarse ? static_cast<double>(rng.below(8)) / 8.0 : rng.uniform01();
    }
    long double wins = 0;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != 1) continue;
      ++pos;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] != 0) continue;
        wins += scores[i] > scores[j] ? 1.0L : scores[i] == scores[j] ? 0.5L : 0.0L;
      }
    }
    neg = n - pos;
    const double oracle = static_cast<double>(wins / (static_cast<long double>(pos) * neg));
    auc_err = std::max(auc_err, std::abs(metrics::roc_auc(scores, labels) - oracle));
  }
  return pass_if(mismatches == 0 && auc_err < 1e-12,
                 std::to_string(1000 - mismatches) + "/1000 confusion matrices match bitwise (" +
                     std::to_string(zero_rows) + " with an empty class or prediction); max roc_auc error " +
                     fmt(auc_err, 3) + " vs pair counting on 200 score sets with ties (< 1e-12)");
}

Outcome statistical_tests() {
  const std::vector<std::vector<double>> a_sets = {
      {0.92, 0.91, 0.93, 0.95, 0.90, 0.92, 0.94, 0.93, 0.91, 0.92},
      {0.81, 0.85, 0.79, 0.88, 0.84, 0.83, 0.86, 0.80, 0.82, 0.87},
      {1.5, 2.25, 0.75, 3.0, 2.0},
      {10.0, 12.5, 9.75, 11.0, 10.5, 13.0, 12.0, 9.5, 10.25, 11.75, 12.25, 10.75, 11.5, 9.25, 13.5},
      {0.5, 0.6}};
  const std::vector<std::vector<double>> b_sets = {
      {0.88, 0.89, 0.90, 0.91, 0.88, 0.87, 0.90, 0.89, 0.90, 0.88},
      {0.80, 0.86, 0.80, 0.85, 0.84, 0.81, 0.87, 0.81, 0.80, 0.86},
      {1.0, 2.5, 0.25, 2.0, 2.5},
      {9.0, 12.0, 10.5, 10.0, 9.5, 12.0, 11.25, 9.75, 9.0, 11.0, 11.0, 10.0, 10.5, 9.5, 12.25},
      {0.4, 0.3}};
  double worst_t = 0.0, worst_d = 0.0, worst_p = 0.0;
  bool df_ok = true;
  for (std::size_t s = 0; s < a_sets.size(); ++s) {
    const auto& a = a_sets[s];
    const auto& b = b_sets[s];
    const std::size_t k = a.size();
    long double mean = 0;
    for (std::size_t i = 0; i < k; ++i) mean += static_cast<long double>(a[i]) - b[i];
    mean /= k;
    long double ss = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const long double d = static_cast<long double>(a[i]) - b[i] - mean;
      ss += d * d;
    }
    const long double sd = std::sqrt(ss / (k - 1));
    const long double t = mean / (sd / std::sqrt(static_cast<long double>(k)));
    const long double p = t_pvalue_oracle(t, static_cast<long double>(k - 1));
    const auto r = metrics::paired_t_test(a, b);
    df_ok &= r.df == k - 1;
    worst_t = std::max(worst_t, static_cast<double>(std::fabs(r.t - t) / std::max(1.0L, std::fabs(t))));
    worst_d = std::max(worst_d, static_cast<double>(std::fabs(r.cohens_d - mean / sd)));
    worst_p = std::max(worst_p, static_cast<double>(std::fabs(r.p - p) / std::max(p, 1e-300L)));
  }

  // Reported rows: d, t, p for df = 9.
  struct Row {
    double d, t, p;
  };
  const Row table[] = {{4.979, 15.745, 7.40e-08}, {6.235, 19.717, 1.03e-08}, {4.566, 14.438, 1.57e-07},
                       {6.754, 21.357, 5.08e-09}, {4.310, 13.629, 2.59e-07}, {5.365, 16.965, 3.86e-08},
                       {9.558, 30.225, 2.32e-10}, {4.802, 15.186, 1.01e-07}, {4.343, 13.734, 2.42e-07}};
  double worst_structure = 0.0, worst_table_p = 0.0;
  for (const auto& row : table) {
    worst_structure = std::max(worst_structure, std::abs(row.d * std::sqrt(10.0) - row.t));
    const double p = 2.0 * metrics::student_t_cdf(-row.t, 9.0);
    worst_table_p = std::max(worst_table_p, std::abs(p - row.p) / row.p);
  }
  RngStream rng(707);
  std::vector<double> fold_a(10), fold_b(10);
  for (std::size_t i = 0; i < 10; ++i) {
    fold_a[i] = 0.9 + 0.02 * rng.uniform(-1, 1);
    fold_b[i] = 0.85 + 0.02 * rng.uniform(-1, 1);
  }
  const auto ten = metrics::paired_t_test(fold_a, fold_b);
  df_ok &= ten.df == 9 && std::abs(ten.t - ten.cohens_d * std::sqrt(10.0)) < 1e-9 * std::abs(ten.t);

  // Rounding of d (3 decimals) and t (3 decimals) allows |d sqrt(10) - t| <= 0.0021.
  const bool ok = worst_t < 1e-9 && worst_d < 1e-9 && worst_p < 1e-9 && df_ok && worst_structure <= 0.0021 &&
                  worst_table_p < 0.01;
  return pass_if(ok, "vs long-double oracle: max rel t error " + fmt(worst_t, 2) + ", max d error " +
                         fmt(worst_d, 2) + ", max rel p error " + fmt(worst_p, 2) + " (< 1e-9); df = k - 1 " +
                         (df_ok ? "holds" : "broken") + " (10 folds -> 9); reported rows: max |d sqrt(10) - t| " +
                         fmt(worst_structure, 2) + " (<= 0.0021), max rel p deviation " + fmt(worst_table_p, 2) +
                         " (< 0.01)");
}

Outcome conformal_coverage() {
  const std::vector<double> alphas = {0.05, 0.1, 0.2};
  const std::size_t n_cal = 500, n_test = 500, seeds = 50;
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<std::vector<double>> coverage(2, std::vector<double>(alphas.size(), 0.0));
  std::vector<double> min_class(2, 0.0);
  bool nested = true;
  for (std::size_t seed = 0; seed < seeds; ++seed) {
    RngStream rng(8000 + seed);
    auto draw = [&](std::size_t n, Tensor& probs, std::vector<int>& labels) {
      probs = Tensor({n, 2});
      labels.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        labels[i] = rng.uniform01() < sigmoid(2.0 * x + 0.3 * x * x) ? 1 : 0;
        const double p1 = sigmoid(1.3 * x + 0.2);
        probs.at(i, 0) = 1.0 - p1;
        probs.at(i, 1) = p1;
      }
    };
    Tensor cal_p, test_p;
    std::vector<int> cal_y, test_y;
    draw(n_cal, cal_p, cal_y);
    draw(n_test, test_p, test_y);
    const auto ones = static_cast<std::size_t>(std::count(cal_y.begin(), cal_y.end(), 1));
    for (std::size_t m = 0; m < 2; ++m) {
      const auto mode = m == 0 ? conformal::Mode::Standard : conformal::Mode::Mondrian;
      min_class[m] += m == 0 ? static_cast<double>(n_cal) : static_cast<double>(std::min(ones, n_cal - ones));
      const auto report = conformal::run(cal_p, cal_y, test_p, test_y, alphas, mode);
      const auto cal = conformal::calibrate(cal_p, cal_y, mode);
      std::vector<std::vector<conformal::PredictionSet>> sets;
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        coverage[m][a] += 1.0 - report.rows[a].error_rate;
        sets.push_back(conformal::predict_sets(test_p, conformal::threshold(cal, alphas[a])));
      }
      for (std::size_t a = 1; a < alphas.size(); ++a) {
        for (std::size_t i = 0; i < n_test; ++i) nested &= (sets[a][i] & ~sets[a - 1][i]) == 0u;
      }
    }
  }
  bool ok = nested;
  std::string detail;
  for (std::size_t m = 0; m < 2; ++m) {
    const double n_eff = min_class[m] / static_cast<double>(seeds);
    detail += m == 0 ? "standard" : "; mondrian";
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double alpha = alphas[a];
      const double var = alpha * (1 - alpha) / (n_eff + 2) + alpha * (1 - alpha) / static_cast<double>(n_test);
      const double eps = 2.326 * std::sqrt(var / static_cast<double>(seeds));
      const double mean = coverage[m][a] / static_cast<double>(seeds);
      ok &= mean >= 1 - alpha - eps;
      detail += " a=" + fmt(alpha, 2) + ": " + fmt(mean, 4) + " >= " + fmt(1 - alpha - eps, 4);
    }
  }
  return pass_if(ok, "mean coverage over 50 seeds, " + detail + "; nested sets " + (nested ? "hold" : "violated"));
}

Outcome shapley_lime() {
  RngStream rng(909);
  double efficiency = 0.0;
  {
    models::ModelSpec spec;
    spec.hp.n_features = 6;
    spec.hp.lstm_units = 3;
    spec.hp.dense_units = 6;
    spec.hp.kan_units_1 = 5;
    spec.hp.kan_units_2 = 4;
    spec.hp.qdense_units_1 = 3;
    spec.hp.qdense_units_2 = 5;
    spec.hp.qdense_units_out = 4;
    spec.hp.n_qubits = 2;
    spec.hp.join_units = 4;
    const auto model = models::Model::build(spec, 11);
    const auto f = explain::model_score_fn(model);
    Tensor background({40, 6});
    for (double& v : background.storage()) v = rng.uniform01();
    for (int k = 0; k < 5; ++k) {
      std::vector<double> x(6);
      for (double& v : x) v = rng.uniform01();
      const auto a = explain::shapley_exact(f, x, background);
      const auto means = explain::column_means(background);
      const double fx = f(Tensor({1, 6}, x))[0];
      const double fb = f(Tensor({1, 6}, means))[0];
      const double sum = std::accumulate(a.values.begin(), a.values.end(), 0.0);
      efficiency = std::max(efficiency, std::abs(sum - (fx - fb)));
    }
  }

  double linear = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t d = 2 + rng.below(9);
    std::vector<double> w(d), x(d), mu(d);
    for (std::size_t j = 0; j < d; ++j) {
      w[j] = rng.uniform(-2, 2);
      x[j] = rng.uniform(-1, 1);
      mu[j] = rng.uniform(-1, 1);
    }
    const double b = rng.uniform(-1, 1);
    const explain::ScoreFn f = [&](const Tensor& rows) {
      std::vector<double> out(rows.dim(0), b);
      for (std::size_t i = 0; i < rows.dim(0); ++i)
        for (std::size_t j = 0; j < d; ++j) out[i] += w[j] * rows.at(i, j);
      return out;
    };
    const auto a = explain::shapley_exact(f, x, mu);
    for (std::size_t j = 0; j < d; ++j) linear = std::max(linear, std::abs(a.values[j] - w[j] * (x[j] - mu[j])));
  }

  std::size_t within = 0, checks = 0;
  const std::vector<std::function<double(const double*)>> games = {
      [](const double* z) { return z[0] * z[1] + std::sin(z[2]) + z[3] * z[3] * z[4]; },
      [](const double* z) { return std::exp(0.5 * z[0]) * z[1] - z[2] * z[3] * z[4] + z[4]; },
      [](const double* z) { return std::tanh(z[0] + z[1] - z[2]) + std::max(z[3], z[4]); },
      [](const double* z) { return 1.0 / (1.0 + std::exp(-(z[0] - 2 * z[1] + z[2] * z[3] - z[4]))); }};
  for (std::size_t g = 0; g < games.size(); ++g) {
    const explain::ScoreFn f = [&](const Tensor& rows) {
      std::vector<double> out(rows.dim(0));
      for (std::size_t i = 0; i < rows.dim(0); ++i) out[i] = games[g](rows.row(i).data());
      return out;
    };
    std::vector<double> x(5), mu(5);
    for (std::size_t j = 0; j < 5; ++j) {
      x[j] = rng.uniform(-1.5, 1.5);
      mu[j] = rng.uniform(-0.5, 0.5);
    }
    const auto exact = explain::shapley_exact(f, x, mu);
    const auto sampled = explain::shapley_sampled(f, x, mu, 400, 1000 + g);
    for (std::size_t j = 0; j < 5; ++j) {
      ++checks;
      within += std::abs(sampled.values[j] - exact.values[j]) <= 3.0 * sampled.std_errors[j] + 1e-12 ? 1 : 0;
    }
  }

  double lime_rel = 0.0;
  {
    const std::size_t d = 6;
    dataset::FeatureMatrix training;
    training.values = Tensor({300, d});
    for (std::size_t j = 0; j < d; ++j) {
      training.column_names.push_back("f" + std::to_string(j));
      training.column_kinds.push_back(j < 4 ? dataset::ColumnKind::Continuous : dataset::ColumnKind::Binary);
    }
    for (std::size_t i = 0; i < 300; ++i) {
      training.labels.push_back(static_cast<int>(i % 2));
      for (std::size_t j = 0; j < d; ++j) {
        training.values.at(i, j) = j < 4 ? rng.uniform01() : static_cast<double>(rng.below(2));
      }
    }
    const std::vector<double> w = {0.8, -1.2, 0.5, 2.0, -0.7, 0.3};
    const explain::ScoreFn f = [&](const Tensor& rows) {
      std::vector<double> out(rows.dim(0), 0.1);
      for (std::size_t i = 0; i < rows.dim(0); ++i)
        for (std::size_t j = 0; j < d; ++j) out[i] += w[j] * rows.at(i, j);
      return out;
    };
    const auto s = explain::lime_explain(f, training.values.row(3), training);
    for (std::size_t j = 0; j < d; ++j) lime_rel = std::max(lime_rel, std::abs(s.weights[j] - w[j]) / std::abs(w[j]));
  }

  const bool ok = efficiency < 1e-9 && linear < 1e-12 && within == checks && lime_rel < 0.05;
  return pass_if(ok, "efficiency gap " + fmt(efficiency, 2) + " (< 1e-9); linear closed-form error " +
                         fmt(linear, 2) + " (< 1e-12); sampled within 3 SE " + std::to_string(within) + "/" +
                         std::to_string(checks) + "; LIME max relative weight error " + fmt(lime_rel, 3) +
                         " (< 0.05)");
}

}  // namespace kacq::acceptance
