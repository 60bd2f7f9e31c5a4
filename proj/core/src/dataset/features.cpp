#include "kacq/dataset/features.hpp"
#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "kacq/error.hpp"
#include "kacq/ndcore/rng.hpp"

namespace kacq::dataset {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Continuous: return "continuous";
    case ColumnKind::Binary: return "binary";
    case ColumnKind::Ordinal: return "ordinal";
    case ColumnKind::OneHot: return "one_hot";
  }
  return "?";
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  if (j >= cols()) throw ParameterError("column index out of range");
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = values.at(i, j);
  return out;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw ParameterError("unknown column '" + name + "'");
  return static_cast<std::size_t>(it - column_names.begin());
}

std::vector<std::size_t> FeatureMatrix::continuous_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < column_kinds.size(); ++j) {
    if (column_kinds[j] == ColumnKind::Continuous) out.push_back(j);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows_idx) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.column_kinds = column_kinds;
  out.scaler = scaler;
  out.values = Tensor({rows_idx.size(), cols()});
  out.labels.reserve(rows_idx.size());
  for (std::size_t i = 0; i < rows_idx.size(); ++i) {
    const std::size_t r = rows_idx[i];
    if (r >= rows()) throw ParameterError("select_rows: row index out of range");
    const auto src = values.row(r);
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
    out.labels.push_back(labels[r]);
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (column_kinds.size() != column_names.size()) throw ShapeError("feature matrix: column metadata mismatch");
  if (values.rank() != 2 || values.dim(0) != labels.size() || values.dim(1) != cols()) {
    throw ShapeError("feature matrix: values " + shape_string(values.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels x " + std::to_string(cols()) +
                     " columns");
  }
  check_finite(values, "feature matrix");
}

FeatureMatrix encode_features(const std::vector<RawRecord>& records, EncodingMode mode) {
  FeatureMatrix m;
  struct Source {
    std::size_t field;
    std::optional<std::size_t> category;
  };
  std::vector<Source> sources;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const ColumnInfo& info = column_info(c);
    if (info.kind == FieldKind::Categorical && mode == EncodingMode::OneHot) {
      for (std::size_t k = 0; k < info.categories.size(); ++k) {
        m.column_names.push_back(std::string(info.name) + "=" + std::string(info.categories[k]));
        m.column_kinds.push_back(ColumnKind::OneHot);
        sources.push_back({c, k});
      }
      continue;
    }
    m.column_names.emplace_back(info.name);
    m.column_kinds.push_back(info.kind == FieldKind::Continuous ? ColumnKind::Continuous
                             : info.kind == FieldKind::Binary   ? ColumnKind::Binary
                                                                : ColumnKind::Ordinal);
    sources.push_back({c, std::nullopt});
  }
  m.values = Tensor({records.size(), sources.size()});
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const auto& f = records[i].fields[sources[j].field];
      if (!f) {
        throw Error("encode_features: record " + std::to_string(i) + " has a missing " +
                    std::string(column_info(sources[j].field).name));
      }
      m.values.at(i, j) = sources[j].category
                              ? (static_cast<std::size_t>(*f) == *sources[j].category ? 1.0 : 0.0)
                              : *f;
    }
    m.labels.push_back(records[i].heart_disease);
  }
  return m;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ParameterError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

IqrBounds fit_iqr(const FeatureMatrix& m, const std::vector<std::size_t>& columns) {
  IqrBounds b;
  b.columns = columns;
  for (std::size_t j : columns) {
    std::vector<double> v = m.column(j);
    std::sort(v.begin(), v.end());
    const double q1 = quantile_sorted(v, 0.25), q3 = quantile_sorted(v, 0.75);
    const double iqr = q3 - q1;
    b.lower.push_back(q1 - 1.5 * iqr);
    b.upper.push_back(q3 + 1.5 * iqr);
  }
  return b;
}

FeatureMatrix apply_iqr(const FeatureMatrix& m, const IqrBounds& bounds) {
  FeatureMatrix out = m;
  for (std::size_t c = 0; c < bounds.columns.size(); ++c) {
    const std::size_t j = bounds.columns[c];
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double& v = out.values.at(i, j);
      v = std::clamp(v, bounds.lower[c], bounds.upper[c]);
    }
  }
  return out;
}

FeatureMatrix cap_outliers_iqr(const FeatureMatrix& m,
                               std::optional<std::vector<std::size_t>> columns) {
  const auto cols = columns ? *columns : m.continuous_columns();
  for (std::size_t j : cols) {
    if (j >= m.cols() || m.column_kinds[j] != ColumnKind::Continuous) {
      throw ParameterError("cap_outliers_iqr: column " + std::to_string(j) + " is not continuous");
    }
  }
  if (m.rows() == 0) return m;
  return apply_iqr(m, fit_iqr(m, cols));
}

ScalerState fit_minmax(const FeatureMatrix& m) {
  if (m.rows() == 0) throw ParameterError("fit_minmax: empty matrix");
  ScalerState s;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const auto v = m.column(j);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    s.min.push_back(*lo);
    s.max.push_back(*hi);
  }
  return s;
}

FeatureMatrix apply_minmax(const FeatureMatrix& m, const ScalerState& scaler) {
  if (scaler.min.size() != m.cols()) throw ShapeError("apply_minmax: scaler column count mismatch");
  FeatureMatrix out = m;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double lo = scaler.min[j], span = scaler.max[j] - scaler.min[j];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double& v = out.values.at(i, j);
      v = span > 0.0 ? (v - lo) / span : 0.0;
    }
  }
  out.scaler = scaler;
  return out;
}

std::pair<FeatureMatrix, ScalerState> scale_minmax(const FeatureMatrix& m) {
  ScalerState s = fit_minmax(m);
  return {apply_minmax(m, s), std::move(s)};
}

FeatureMatrix smote_balance(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.labels[i] != 0 && m.labels[i] != 1) throw ParameterError("smote: labels must be 0/1");
    by_class[static_cast<std::size_t>(m.labels[i])].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw ParameterError("smote: both classes must be present");
  }
  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& idx = by_class[static_cast<std::size_t>(minority)];
  const std::size_t need = by_class[static_cast<std::size_t>(1 - minority)].size() - idx.size();
  if (need == 0) return m;
  if (k == 0 || idx.size() <= k) {
    throw ParameterError("smote: minority class has " + std::to_string(idx.size()) +
                         " rows, needs more than k = " + std::to_string(k));
  }
  const std::size_t d = m.cols(), n_min = idx.size();
  // k nearest minority neighbours of every minority row (ties by index).
  std::vector<std::vector<std::size_t>> neighbours(n_min);
  std::vector<std::pair<double, std::size_t>> dist(n_min);
  for (std::size_t a = 0; a < n_min; ++a) {
    const auto xa = m.values.row(idx[a]);
    for (std::size_t b = 0; b < n_min; ++b) {
      const auto xb = m.values.row(idx[b]);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
      dist[b] = {b == a ? std::numeric_limits<double>::infinity() : s, b};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t t = 0; t < k; ++t) neighbours[a].push_back(dist[t].second);
  }
  RngStream rng(seed, 0x736d6f7465ULL);
  FeatureMatrix out = m;
  Tensor values({m.rows() + need, d});
  std::copy(m.values.ptr(), m.values.ptr() + m.values.size(), values.ptr());
  for (std::size_t s = 0; s < need; ++s) {
    const std::size_t a = static_cast<std::size_t>(rng.below(n_min));
    const std::size_t b = neighbours[a][static_cast<std::size_t>(rng.below(k))];
    const double u = rng.uniform01();
    const auto xa = m.values.row(idx[a]);
    const auto xb = m.values.row(idx[b]);
    auto dst = values.row(m.rows() + s);
    for (std::size_t j = 0; j < d; ++j) dst[j] = xa[j] + u * (xb[j] - xa[j]);
    out.labels.push_back(minority);
  }
  out.values = std::move(values);
  return out;
}

FeatureMatrix add_interactions(const FeatureMatrix& m,
                               const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) return m;
  std::vector<std::pair<std::size_t, std::size_t>> cols;
  for (const auto& [a, b] : pairs) cols.emplace_back(m.column_index(a), m.column_index(b));
  FeatureMatrix out;
  out.labels = m.labels;
  out.scaler = m.scaler;
  out.column_names = m.column_names;
  out.column_kinds = m.column_kinds;
  const std::size_t d = m.cols() + pairs.size();
  out.values = Tensor({m.rows(), d});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.values.row(i);
    auto dst = out.values.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    for (std::size_t p = 0; p < cols.size(); ++p) {
      dst[m.cols() + p] = src[cols[p].first] * src[cols[p].second];
    }
  }
  for (const auto& [a, b] : pairs) {
    out.column_names.push_back(a + "*" + b);
    out.column_kinds.push_back(ColumnKind::Continuous);
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> class_indices(const std::vector<int>& labels) {
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw ParameterError("labels must be non-negative");
    max_label = std::max(max_label, y);
  }
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<int>& labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("stratified_split: ratio must be in (0, 1)");
  auto classes = class_indices(labels);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].empty() && classes[c].size() < 2) {
      throw ParameterError("stratified_split: class " + std::to_string(c) +
                           " has fewer than 2 samples");
    }
  }
  // Largest-remainder allocation so the first part has round(ratio * n) rows overall.
  const std::size_t total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(labels.size())));
  std::vector<std::size_t> take(classes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double exact = ratio * static_cast<double>(classes[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
    ++take[remainders[r].second];
  }
  RngStream rng(seed, 0x73706c6974ULL);
  std::vector<std::size_t> first, second;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& idx = classes[c];
    RngStream cr = rng.child(c);
    cr.shuffle(idx);
    first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    second.insert(second.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {first, second};
}

std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& m, double ratio,
                                                         std::uint64_t seed) {
  const auto [a, b] = stratified_split_indices(m.labels, ratio, seed);
  return {m.select_rows(a), m.select_rows(b)};
}

std::vector<Fold> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                   std::uint64_t seed) {
  if (k < 2) throw ParameterError("stratified_folds: k must be at least 2");
  if (k > labels.size()) {
    throw ParameterError("stratified_folds: k = " + std::to_string(k) + " exceeds " +
                         std::to_string(labels.size()) + " samples");
  }
  auto classes = class_indices(labels);
  RngStream rng(seed, 0x666f6c6473ULL);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t next = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& idx = classes[c];
    RngStream cr = rng.child(c);
    cr.shuffle(idx);
    for (std::size_t i : idx) fold_of[i] = next++ % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
  for (const auto& name : m.column_names) out << name << ',';
  out << kLabelName << '\n';
  shortest_doubles(out);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << m.values.at(i, j) << ',';
    out << m.labels[i] << '\n';
  }
}

nlohmann::json scaler_to_json(const ScalerState& s, const std::vector<std::string>& names) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t c = 0; c < s.min.size(); ++c) {
    j.push_back({{"column", c < names.size() ? names[c] : std::to_string(c)},
                 {"min", s.min[c]},
                 {"max", s.max[c]}});
  }
  return j;
}

}  // namespace kacq::dataset
