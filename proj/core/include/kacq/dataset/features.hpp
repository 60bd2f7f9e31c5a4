#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/records.hpp"
#include "kacq/ndcore/tensor.hpp"

namespace kacq::dataset {

enum class ColumnKind { Continuous, Binary, Ordinal, OneHot };
std::string to_string(ColumnKind kind);

/// Per-column affine map x' = (x - min) / (max - min); a constant column maps to 0.
struct ScalerState {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const ScalerState&, const ScalerState&) = default;
};

struct FeatureMatrix {
  Tensor values;  // [rows x cols]
  std::vector<int> labels;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  std::optional<ScalerState> scaler;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t cols() const noexcept { return column_names.size(); }
  std::vector<double> column(std::size_t j) const;
  /// Index of a column by name; throws ParameterError when absent.
  std::size_t column_index(const std::string& name) const;
  std::vector<std::size_t> continuous_columns() const;
  FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;
  /// Throws when shapes disagree or values are non-finite.
  void validate() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

enum class EncodingMode { Ordinal, OneHot };

/// Ordinal: one column per feature in schema order. OneHot: ChestPainType, RestingECG and
/// ST_Slope expand into indicator columns named "<column>=<category>".
FeatureMatrix encode_features(const std::vector<RawRecord>& records, EncodingMode mode);

/// Type-7 quantile (linear interpolation between order statistics) of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

struct IqrBounds {
  std::vector<std::size_t> columns;
  std::vector<double> lower;
  std::vector<double> upper;
};
/// Bounds Q1 - 1.5 IQR and Q3 + 1.5 IQR for each listed column.
IqrBounds fit_iqr(const FeatureMatrix& m, const std::vector<std::size_t>& columns);
FeatureMatrix apply_iqr(const FeatureMatrix& m, const IqrBounds& bounds);
/// Winsorizes `columns` (default: every continuous column) of m at its own IQR bounds.
FeatureMatrix cap_outliers_iqr(const FeatureMatrix& m,
                               std::optional<std::vector<std::size_t>> columns = std::nullopt);

ScalerState fit_minmax(const FeatureMatrix& m);
FeatureMatrix apply_minmax(const FeatureMatrix& m, const ScalerState& scaler);
/// Fits on m and applies; every column is scaled.
std::pair<FeatureMatrix, ScalerState> scale_minmax(const FeatureMatrix& m);

/// Upsamples the minority class to the majority count with synthetic rows
/// x + u (x_nn - x), u ~ U[0, 1], x_nn drawn from the k nearest minority neighbours of x.
FeatureMatrix smote_balance(const FeatureMatrix& m, std::size_t k, std::uint64_t seed);

/// Appends one product column per pair, named "<a>*<b>".
FeatureMatrix add_interactions(const FeatureMatrix& m,
                               const std::vector<std::pair<std::string, std::string>>& pairs);

/// Class-stratified split of row indices; `ratio` of each class goes to the first part.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<int>& labels, double ratio, std::uint64_t seed);
std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& m, double ratio,
                                                         std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
/// k stratified folds; every index appears in exactly one test fold.
std::vector<Fold> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                   std::uint64_t seed);

/// Matrix as CSV with a header row, label last.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);

nlohmann::json scaler_to_json(const ScalerState& s, const std::vector<std::string>& names);

}  // namespace kacq::dataset
