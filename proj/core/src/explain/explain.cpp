#include "kacq/explain/explain.hpp"
#include "kacq/ndcore/format.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "kacq/error.hpp"
#include "kacq/ndcore/linalg.hpp"
#include "kacq/ndcore/rng.hpp"

namespace kacq::explain {

ScoreFn model_score_fn(const models::Model& model) {
  return [&model](const Tensor& rows) { return models::class1_scores(model.predict(rows)); };
}

std::vector<double> column_means(const Tensor& background) {
  if (background.rank() != 2 || background.dim(0) == 0) {
    throw ShapeError("background must be a non-empty [n x d] matrix");
  }
  const std::size_t n = background.dim(0), d = background.dim(1);
  std::vector<double> means(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) means[j] += background.at(i, j);
  }
  for (double& m : means) m /= static_cast<double>(n);
  return means;
}

namespace {

void check_dims(std::span<const double> x, std::span<const double> means) {
  if (x.size() != means.size()) {
    throw ShapeError("explain: instance has " + std::to_string(x.size()) +
                     " features, background has " + std::to_string(means.size()));
  }
  if (x.empty()) throw ParameterError("explain: no features");
}

std::vector<double> evaluate(const ScoreFn& f, const Tensor& rows) {
  auto out = f(rows);
  if (out.size() != rows.dim(0)) throw ShapeError("explain: score function returned wrong length");
  return out;
}

}  // namespace

Attribution shapley_exact(const ScoreFn& f, std::span<const double> x,
                          std::span<const double> background_means) {
  check_dims(x, background_means);
  const std::size_t d = x.size();
  if (d > kMaxExactFeatures) {
    throw ParameterError("shapley_exact: " + std::to_string(d) +
                         " features exceed the exact limit of 16; use shapley_sampled");
  }
  const std::size_t subsets = std::size_t{1} << d;
  Tensor rows({subsets, d});
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t j = 0; j < d; ++j) rows.at(s, j) = ((s >> j) & 1u) ? x[j] : background_means[j];
  }
  const auto v = evaluate(f, rows);
  // weight[k] = k! (d - k - 1)! / d!
  std::vector<double> weight(d);
  for (std::size_t k = 0; k < d; ++k) {
    weight[k] = std::exp(std::lgamma(static_cast<double>(k) + 1.0) +
                         std::lgamma(static_cast<double>(d - k)) -
                         std::lgamma(static_cast<double>(d) + 1.0));
  }
  Attribution a;
  a.values.assign(d, 0.0);
  for (std::size_t s = 0; s < subsets; ++s) {
    const auto k = static_cast<std::size_t>(__builtin_popcountll(s));
    for (std::size_t j = 0; j < d; ++j) {
      if ((s >> j) & 1u) continue;
      a.values[j] += weight[k] * (v[s | (std::size_t{1} << j)] - v[s]);
    }
  }
  a.base = v[0];
  a.output = v[subsets - 1];
  return a;
}

Attribution shapley_exact(const ScoreFn& f, std::span<const double> x, const Tensor& background) {
  const auto means = column_means(background);
  return shapley_exact(f, x, means);
}

Attribution shapley_sampled(const ScoreFn& f, std::span<const double> x,
                            std::span<const double> background_means, std::size_t permutations,
                            std::uint64_t seed) {
  check_dims(x, background_means);
  if (permutations == 0) throw ParameterError("shapley_sampled: need at least one permutation");
  const std::size_t d = x.size();
  RngStream rng(seed, stream_id("shapley"));
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  constexpr std::size_t kChunk = 64;
  for (std::size_t p0 = 0; p0 < permutations; p0 += kChunk) {
    const std::size_t np = std::min(kChunk, permutations - p0);
    std::vector<std::vector<std::size_t>> orders;
    Tensor rows({np * (d + 1), d});
    for (std::size_t p = 0; p < np; ++p) {
      orders.push_back(rng.permutation(d));
      std::vector<double> z(background_means.begin(), background_means.end());
      for (std::size_t step = 0; step <= d; ++step) {
        if (step > 0) z[orders[p][step - 1]] = x[orders[p][step - 1]];
        std::copy(z.begin(), z.end(), rows.row(p * (d + 1) + step).begin());
      }
    }
    const auto v = evaluate(f, rows);
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t step = 1; step <= d; ++step) {
        const double delta = v[p * (d + 1) + step] - v[p * (d + 1) + step - 1];
        const std::size_t j = orders[p][step - 1];
        sum[j] += delta;
        sum_sq[j] += delta * delta;
      }
    }
  }
  Attribution a;
  const double m = static_cast<double>(permutations);
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = sum[j] / m;
    a.values.push_back(mean);
    const double var = permutations > 1 ? std::max(0.0, (sum_sq[j] - m * mean * mean) / (m - 1.0)) : 0.0;
    a.std_errors.push_back(std::sqrt(var / m));
  }
  Tensor ends({2, d});
  std::copy(background_means.begin(), background_means.end(), ends.row(0).begin());
  std::copy(x.begin(), x.end(), ends.row(1).begin());
  const auto v = evaluate(f, ends);
  a.base = v[0];
  a.output = v[1];
  return a;
}

LocalSurrogate lime_explain(const ScoreFn& f, std::span<const double> x,
                            const dataset::FeatureMatrix& training, const LimeConfig& config) {
  const std::size_t d = x.size();
  if (training.cols() != d) throw ShapeError("lime_explain: training matrix width mismatch");
  if (training.rows() == 0) throw ParameterError("lime_explain: empty training matrix");
  if (config.samples < 2) throw ParameterError("lime_explain: need at least 2 samples");
  const auto means = column_means(training.values);
  std::vector<double> sd(d, 0.0);
  for (std::size_t i = 0; i < training.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double r = training.values.at(i, j) - means[j];
      sd[j] += r * r;
    }
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(training.rows()));

  LocalSurrogate out;
  out.kernel_width = config.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(d)));
  if (!(out.kernel_width > 0.0)) throw ParameterError("lime_explain: kernel width must be positive");

  RngStream rng(config.seed, stream_id("lime"));
  const std::size_t n = config.samples;
  Tensor z({n, d});
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double v;
      if (i == 0) {
        v = x[j];
      } else if (training.column_kinds[j] == dataset::ColumnKind::Continuous) {
        v = x[j] + rng.normal(0.0, sd[j]);
      } else {
        v = training.values.at(static_cast<std::size_t>(rng.below(training.rows())), j);
      }
      z.at(i, j) = v;
      if (sd[j] > 0.0) dist2 += (v - x[j]) * (v - x[j]) / (sd[j] * sd[j]);
    }
    weight[i] = std::exp(-dist2 / (out.kernel_width * out.kernel_width));
  }
  const auto y = evaluate(f, z);

  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  if (!(wsum > 0.0)) throw NumericError("lime_explain: all perturbation weights are zero");
  std::vector<double> zbar(d, 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) zbar[j] += weight[i] * z.at(i, j);
    ybar += weight[i] * y[i];
  }
  for (double& v : zbar) v /= wsum;
  ybar /= wsum;
  Tensor gram({d, d});
  Tensor rhs({d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double za = weight[i] * (z.at(i, a) - zbar[a]);
      rhs[a] += za * (y[i] - ybar);
      for (std::size_t b = 0; b < d; ++b) gram.at(a, b) += za * (z.at(i, b) - zbar[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) gram.at(a, a) += config.ridge;
  Tensor w;
  try {
    w = solve_spd(gram, rhs);
  } catch (const NumericError&) {
    throw NumericError("lime_explain: degenerate perturbation covariance");
  }
  out.weights.assign(w.ptr(), w.ptr() + d);
  out.intercept = ybar - std::inner_product(out.weights.begin(), out.weights.end(), zbar.begin(), 0.0);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = out.intercept;
    for (std::size_t j = 0; j < d; ++j) pred += out.weights[j] * z.at(i, j);
    ss_res += weight[i] * (y[i] - pred) * (y[i] - pred);
    ss_tot += weight[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

nlohmann::json to_json(const Attribution& a, const std::vector<std::string>& names) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    nlohmann::json row = {{"feature", j < names.size() ? names[j] : std::to_string(j)},
                          {"value", a.values[j]}};
    if (j < a.std_errors.size()) row["std_error"] = a.std_errors[j];
    features.push_back(row);
  }
  return {{"base", a.base}, {"output", a.output}, {"attributions", features}};
}

nlohmann::json to_json(const LocalSurrogate& s, const std::vector<std::string>& names) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t j = 0; j < s.weights.size(); ++j) {
    weights.push_back({{"feature", j < names.size() ? names[j] : std::to_string(j)},
                       {"weight", s.weights[j]}});
  }
  return {{"intercept", s.intercept}, {"kernel_width", s.kernel_width}, {"r2", s.r2},
          {"weights", weights}};
}

void write_attribution_csv(std::ostream& out, const Attribution& a,
                           const std::vector<std::string>& names) {
  shortest_doubles(out) << "feature,value,std_error\n";
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    out << (j < names.size() ? names[j] : std::to_string(j)) << ',' << a.values[j] << ',';
    if (j < a.std_errors.size()) out << a.std_errors[j];
    out << '\n';
  }
}

}  // namespace kacq::explain
