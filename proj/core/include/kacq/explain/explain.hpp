#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/features.hpp"
#include "kacq/models/model.hpp"

namespace kacq::explain {

/// Class-1 probability (or any scalar output) for each row of [n x d].
using ScoreFn = std::function<std::vector<double>(const Tensor& rows)>;

ScoreFn model_score_fn(const models::Model& model);

struct Attribution {
  std::vector<double> values;
  std::vector<double> std_errors;  // sampled estimator only
  double base = 0.0;               // f at the background means
  double output = 0.0;             // f(x)
};

std::vector<double> column_means(const Tensor& background);

inline constexpr std::size_t kMaxExactFeatures = 16;

/// Exact Shapley values of v(S) = f(x_S, mean_{not S}) over all 2^d coalitions.
/// Throws ParameterError when d > 16 (use shapley_sampled).
Attribution shapley_exact(const ScoreFn& f, std::span<const double> x,
                          std::span<const double> background_means);
Attribution shapley_exact(const ScoreFn& f, std::span<const double> x, const Tensor& background);

/// Permutation sampling of the same value function; std_errors are sample std / sqrt(m).
Attribution shapley_sampled(const ScoreFn& f, std::span<const double> x,
                            std::span<const double> background_means, std::size_t permutations,
                            std::uint64_t seed);

struct LimeConfig {
  std::size_t samples = 5000;
  std::optional<double> kernel_width;  // default 0.75 * sqrt(d)
  double ridge = 1e-3;
  std::uint64_t seed = 42;
};

struct LocalSurrogate {
  std::vector<double> weights;
  double intercept = 0.0;
  double kernel_width = 0.0;
  double r2 = 0.0;
};

/// Perturbs continuous columns with N(0, column std) and resamples the other columns
/// from the training rows, weights samples by exp(-dist^2 / width^2) on std-scaled
/// distances, and fits weighted ridge regression to f.
LocalSurrogate lime_explain(const ScoreFn& f, std::span<const double> x,
                            const dataset::FeatureMatrix& training, const LimeConfig& config = {});

nlohmann::json to_json(const Attribution& a, const std::vector<std::string>& names);
nlohmann::json to_json(const LocalSurrogate& s, const std::vector<std::string>& names);
void write_attribution_csv(std::ostream& out, const Attribution& a,
                           const std::vector<std::string>& names);

}  // namespace kacq::explain
