#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kacq::dataset {

/// Feature columns of the heart-disease schema, in file order.
enum class Column : std::size_t {
  Age,
  Sex,
  ChestPainType,
  RestingBP,
  Cholesterol,
  FastingBS,
  RestingECG,
  MaxHR,
  ExerciseAngina,
  Oldpeak,
  StSlope,
};
inline constexpr std::size_t kFeatureCount = 11;
inline constexpr std::string_view kLabelName = "HeartDisease";

enum class FieldKind { Continuous, Binary, Categorical };

struct ColumnInfo {
  std::string_view name;
  FieldKind kind;
  /// Category names indexed by their code; empty for continuous columns.
  std::vector<std::string_view> categories;
};

/// Fixed code tables: Sex M=0 F=1; ChestPainType ASY=0 ATA=1 NAP=2 TA=3;
/// FastingBS 0/1; RestingECG Normal=0 ST=1 LVH=2; ExerciseAngina N=0 Y=1;
/// ST_Slope Down=0 Flat=1 Up=2.
const ColumnInfo& column_info(Column c);
const ColumnInfo& column_info(std::size_t index);
std::optional<Column> column_from_name(std::string_view name);

/// One patient row. Categorical fields hold their integer code; std::nullopt marks a
/// missing value. The label is never missing.
struct RawRecord {
  std::array<std::optional<double>, kFeatureCount> fields{};
  int heart_disease = 0;

  std::optional<double>& operator[](Column c) { return fields[static_cast<std::size_t>(c)]; }
  const std::optional<double>& operator[](Column c) const {
    return fields[static_cast<std::size_t>(c)];
  }
  bool missing(Column c) const { return !(*this)[c].has_value(); }

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct LoadOptions {
  /// Cholesterol = 0 and RestingBP = 0 become missing.
  bool sentinel_zero_missing = true;

  friend bool operator==(const LoadOptions&, const LoadOptions&) = default;
};

/// Parses a CSV whose header names the eleven feature columns and HeartDisease (any
/// order). Empty, "NA" and "?" cells are missing. Throws SchemaError for unknown or absent
/// columns and ParseError (with the 1-based line number) for malformed rows.
std::vector<RawRecord> load_records(const std::filesystem::path& path,
                                    const LoadOptions& options = {});
std::vector<RawRecord> parse_records(std::istream& in, const LoadOptions& options = {});

/// Writes records back in canonical column order; missing values are empty cells.
void write_records(std::ostream& out, const std::vector<RawRecord>& records);

/// Drops exact duplicates (all fields and the label equal), keeping first occurrences.
std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records);

/// Per-column fill values: lower median for continuous columns, mode for the others
/// (ties broken by the lexicographically first category name).
struct ImputeStats {
  std::array<double, kFeatureCount> fill{};
};

/// Throws Error when a column has no observed value.
ImputeStats fit_imputer(const std::vector<RawRecord>& records);
std::vector<RawRecord> apply_imputer(const std::vector<RawRecord>& records,
                                     const ImputeStats& stats);
std::vector<RawRecord> impute_missing(const std::vector<RawRecord>& records);

}  // namespace kacq::dataset
