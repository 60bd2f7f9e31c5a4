#include "kacq/dataset/records.hpp"
#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "kacq/error.hpp"

namespace kacq::dataset {

namespace {

const std::array<ColumnInfo, kFeatureCount>& columns() {
  static const std::array<ColumnInfo, kFeatureCount> table{{
      {"Age", FieldKind::Continuous, {}},
      {"Sex", FieldKind::Binary, {"M", "F"}},
      {"ChestPainType", FieldKind::Categorical, {"ASY", "ATA", "NAP", "TA"}},
      {"RestingBP", FieldKind::Continuous, {}},
      {"Cholesterol", FieldKind::Continuous, {}},
      {"FastingBS", FieldKind::Binary, {"0", "1"}},
      {"RestingECG", FieldKind::Categorical, {"Normal", "ST", "LVH"}},
      {"MaxHR", FieldKind::Continuous, {}},
      {"ExerciseAngina", FieldKind::Binary, {"N", "Y"}},
      {"Oldpeak", FieldKind::Continuous, {}},
      {"ST_Slope", FieldKind::Categorical, {"Down", "Flat", "Up"}},
  }};
  return table;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA" || s == "?"; }

double parse_number(std::string_view s, std::string_view column, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("invalid number '" + std::string(s) + "' in column " + std::string(column),
                     line);
  }
  return v;
}

}  // namespace

const ColumnInfo& column_info(Column c) { return columns()[static_cast<std::size_t>(c)]; }

const ColumnInfo& column_info(std::size_t index) {
  if (index >= kFeatureCount) throw ParameterError("column index out of range");
  return columns()[index];
}

std::optional<Column> column_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (columns()[i].name == name) return static_cast<Column>(i);
  }
  return std::nullopt;
}

std::vector<RawRecord> parse_records(std::istream& in, const LoadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<RawRecord> records;
  if (!std::getline(in, line)) return records;
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);

  constexpr std::size_t kLabel = kFeatureCount;
  std::vector<std::size_t> slot_of_cell;
  std::array<bool, kFeatureCount + 1> seen{};
  for (std::string_view name : split_csv(line)) {
    std::size_t slot = 0;
    if (name == kLabelName) {
      slot = kLabel;
    } else if (auto c = column_from_name(name)) {
      slot = static_cast<std::size_t>(*c);
    } else {
      throw SchemaError("unknown column '" + std::string(name) + "' in header");
    }
    if (seen[slot]) throw SchemaError("duplicate column '" + std::string(name) + "' in header");
    seen[slot] = true;
    slot_of_cell.push_back(slot);
  }
  for (std::size_t s = 0; s <= kFeatureCount; ++s) {
    if (!seen[s]) {
      const std::string name(s == kLabel ? kLabelName : columns()[s].name);
      throw SchemaError("header is missing column '" + name + "'");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != slot_of_cell.size()) {
      throw ParseError("expected " + std::to_string(slot_of_cell.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    RawRecord r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t slot = slot_of_cell[i];
      const std::string_view cell = cells[i];
      if (slot == kLabel) {
        if (is_missing_token(cell)) throw ParseError("missing HeartDisease label", line_no);
        const double v = parse_number(cell, kLabelName, line_no);
        if (v != 0.0 && v != 1.0) throw ParseError("HeartDisease must be 0 or 1", line_no);
        r.heart_disease = static_cast<int>(v);
        continue;
      }
      if (is_missing_token(cell)) continue;
      const ColumnInfo& info = columns()[slot];
      if (info.kind == FieldKind::Continuous) {
        double v = parse_number(cell, info.name, line_no);
        const auto col = static_cast<Column>(slot);
        if (options.sentinel_zero_missing && v == 0.0 &&
            (col == Column::Cholesterol || col == Column::RestingBP)) {
          continue;
        }
        r.fields[slot] = v;
        continue;
      }
      const auto it = std::find(info.categories.begin(), info.categories.end(), cell);
      if (it == info.categories.end()) {
        throw ParseError("unknown category '" + std::string(cell) + "' in column " +
                             std::string(info.name),
                         line_no);
      }
      r.fields[slot] = static_cast<double>(it - info.categories.begin());
    }
    records.push_back(r);
  }
  return records;
}

std::vector<RawRecord> load_records(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return parse_records(in, options);
}

void write_records(std::ostream& out, const std::vector<RawRecord>& records) {
  shortest_doubles(out);
  for (std::size_t i = 0; i < kFeatureCount; ++i) out << columns()[i].name << ',';
  out << kLabelName << '\n';
  for (const RawRecord& r : records) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (const auto& v = r.fields[i]) {
        const ColumnInfo& info = columns()[i];
        if (info.kind == FieldKind::Continuous) {
          out << *v;
        } else {
          out << info.categories.at(static_cast<std::size_t>(*v));
        }
      }
      out << ',';
    }
    out << r.heart_disease << '\n';
  }
}

std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records) {
  struct Hash {
    std::size_t operator()(const RawRecord& r) const noexcept {
      std::size_t h = std::hash<int>{}(r.heart_disease);
      for (const auto& f : r.fields) {
        const std::size_t v = f ? std::hash<double>{}(*f) : 0x9e3779b9U;
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      }
      return h;
    }
  };
  std::unordered_set<RawRecord, Hash> seen;
  std::vector<RawRecord> out;
  for (const RawRecord& r : records) {
    if (seen.insert(r).second) out.push_back(r);
  }
  return out;
}

ImputeStats fit_imputer(const std::vector<RawRecord>& records) {
  ImputeStats stats;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const ColumnInfo& info = columns()[c];
    std::vector<double> observed;
    for (const RawRecord& r : records) {
      if (r.fields[c]) observed.push_back(*r.fields[c]);
    }
    if (observed.empty()) {
      throw Error("imputation: column " + std::string(info.name) + " has no observed values");
    }
    if (info.kind == FieldKind::Continuous) {
      std::sort(observed.begin(), observed.end());
      stats.fill[c] = observed[(observed.size() - 1) / 2];
      continue;
    }
    std::map<std::string_view, std::pair<std::size_t, double>> counts;
    for (double v : observed) {
      auto& e = counts[info.categories.at(static_cast<std::size_t>(v))];
      ++e.first;
      e.second = v;
    }
    std::size_t best = 0;
    for (const auto& [name, entry] : counts) {
      if (entry.first > best) {
        best = entry.first;
        stats.fill[c] = entry.second;
      }
    }
  }
  return stats;
}

std::vector<RawRecord> apply_imputer(const std::vector<RawRecord>& records,
                                     const ImputeStats& stats) {
  std::vector<RawRecord> out = records;
  for (RawRecord& r : out) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (!r.fields[c]) r.fields[c] = stats.fill[c];
    }
  }
  return out;
}

std::vector<RawRecord> impute_missing(const std::vector<RawRecord>& records) {
  bool any_missing = false;
  for (const RawRecord& r : records)
    for (const auto& f : r.fields) any_missing = any_missing || !f;
  if (!any_missing) return records;
  return apply_imputer(records, fit_imputer(records));
}

}  // namespace kacq::dataset
