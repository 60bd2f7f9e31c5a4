#include <cmath>
#include <numeric>

#include "doctest.h"
#include "kacq/error.hpp"
#include "kacq/explain/explain.hpp"

using namespace kacq;
using namespace kacq::explain;

namespace {

ScoreFn product_fn() {
  return [](const Tensor& rows) {
    std::vector<double> out(rows.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rows.at(i, 0) * rows.at(i, 1) + rows.at(i, 2);
    return out;
  };
}

}  // namespace

TEST_CASE("two-feature interaction splits evenly") {
  const std::vector<double> x{2, 3, 1}, base{0, 0, 0};
  const Attribution a = shapley_exact(product_fn(), x, base);
  CHECK(a.values[0] == doctest::Approx(3.0));
  CHECK(a.values[1] == doctest::Approx(3.0));
  CHECK(a.values[2] == doctest::Approx(1.0));
  CHECK(a.output == 7.0);
  CHECK(a.base == 0.0);
}

TEST_CASE("background means and limits") {
  const Tensor bg = Tensor::from_rows({{1, 2, 3}, {3, 4, 5}});
  CHECK(column_means(bg) == std::vector<double>{2, 3, 4});
  const Attribution a = shapley_exact(product_fn(), std::vector<double>{2, 3, 4}, bg);
  CHECK(a.base == 10.0);
  CHECK(std::accumulate(a.values.begin(), a.values.end(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<double> wide(17, 0.0);
  CHECK_THROWS_AS(shapley_exact(product_fn(), wide, wide), ParameterError);
}

TEST_CASE("sampled estimator is seeded") {
  const std::vector<double> x{2, 3, 1}, base{0.5, 0.5, 0.5};
  const Attribution a = shapley_sampled(product_fn(), x, base, 200, 1);
  const Attribution b = shapley_sampled(product_fn(), x, base, 200, 1);
  CHECK(a.values == b.values);
  CHECK(a.std_errors.size() == 3);
  // Permutation sums telescope, so efficiency holds for every sample.
  CHECK(std::accumulate(a.values.begin(), a.values.end(), 0.0) == doctest::Approx(a.output - a.base));
}

TEST_CASE("lime reports a good fit on a linear function") {
  dataset::FeatureMatrix train;
  RngStream rng(3);
  train.values = Tensor({200, 2});
  for (double& v : train.values.storage()) v = rng.uniform01();
  train.labels.assign(200, 0);
  train.column_names = {"a", "b"};
  train.column_kinds = {dataset::ColumnKind::Continuous, dataset::ColumnKind::Continuous};
  ScoreFn f = [](const Tensor& rows) {
    std::vector<double> out(rows.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2 * rows.at(i, 0) - rows.at(i, 1) + 0.5;
    return out;
  };
  LimeConfig cfg;
  cfg.samples = 500;
  const LocalSurrogate s = lime_explain(f, std::vector<double>{0.3, 0.6}, train, cfg);
  CHECK(s.weights[0] == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(s.weights[1] == doctest::Approx(-1.0).epsilon(1e-2));
  CHECK(s.r2 > 0.99);
  CHECK(s.kernel_width == doctest::Approx(0.75 * std::sqrt(2.0)));
  const auto j = to_json(s, train.column_names);
  CHECK(j.contains("weights"));
}
