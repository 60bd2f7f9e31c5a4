#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "kacq/dataset/features.hpp"
#include "kacq/dataset/pipeline.hpp"
#include "kacq/dataset/records.hpp"
#include "kacq/error.hpp"
#include "synthetic_heart.hpp"

using namespace kacq;
using namespace kacq::dataset;

namespace {

const char* kHeader =
    "Age,Sex,ChestPainType,RestingBP,Cholesterol,FastingBS,RestingECG,MaxHR,ExerciseAngina,"
    "Oldpeak,ST_Slope,HeartDisease\n";

std::vector<RawRecord> parse(const std::string& body, LoadOptions opt = {}) {
  std::istringstream in(kHeader + body);
  return parse_records(in, opt);
}

}  // namespace

TEST_CASE("parsing with code tables and sentinels") {
  const auto r = parse("40,M,ATA,140,289,0,Normal,172,N,0,Up,0\n49,F,NAP,160,0,0,ST,156,N,1,Flat,1\n");
  REQUIRE(r.size() == 2);
  CHECK(*r[0][Column::Age] == 40);
  CHECK(*r[0][Column::Sex] == 0);
  CHECK(*r[0][Column::ChestPainType] == 1);
  CHECK(*r[1][Column::Sex] == 1);
  CHECK(*r[1][Column::StSlope] == 1);
  CHECK(r[1].missing(Column::Cholesterol));
  CHECK(r[1].heart_disease == 1);
  const auto raw = parse("49,F,NAP,160,0,0,ST,156,N,1,Flat,1\n", LoadOptions{false});
  CHECK(*raw[0][Column::Cholesterol] == 0);
  const auto na = parse("NA,M,?,140,,0,Normal,172,N,0,Up,0\n");
  CHECK(na[0].missing(Column::Age));
  CHECK(na[0].missing(Column::ChestPainType));
  CHECK(na[0].missing(Column::Cholesterol));
}

TEST_CASE("parsing errors name the line") {
  CHECK_THROWS_AS(parse("40,M,XYZ,140,289,0,Normal,172,N,0,Up,0\n"), ParseError);
  CHECK_THROWS_AS(parse("40,M,ATA,140\n"), ParseError);
  CHECK_THROWS_AS(parse("40,M,ATA,140,289,0,Normal,172,N,0,Up,\n"), ParseError);
  try {
    parse("40,M,ATA,140,289,0,Normal,172,N,0,Up,0\nabc,M,ATA,140,289,0,Normal,172,N,0,Up,0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
  }
  std::istringstream missing_col("Age,Sex\n1,M\n");
  CHECK_THROWS_AS(parse_records(missing_col), SchemaError);
  std::istringstream extra_col(std::string("Foo,") + kHeader);
  CHECK_THROWS_AS(parse_records(extra_col), SchemaError);
}

TEST_CASE("column order in the header is free") {
  std::istringstream in(
      "HeartDisease,ST_Slope,Oldpeak,ExerciseAngina,MaxHR,RestingECG,FastingBS,Cholesterol,"
      "RestingBP,ChestPainType,Sex,Age\n1,Up,0.5,Y,150,LVH,1,200,130,TA,M,61\n");
  const auto r = parse_records(in);
  CHECK(*r[0][Column::Age] == 61);
  CHECK(*r[0][Column::RestingECG] == 2);
  CHECK(r[0].heart_disease == 1);
}

TEST_CASE("write and reparse round trip") {
  testing::SyntheticHeartOptions opt;
  opt.rows = 60;
  opt.missing_rate = 0.05;
  const auto recs = testing::synthetic_heart(opt);
  std::stringstream ss;
  write_records(ss, recs);
  CHECK(parse_records(ss, LoadOptions{false}) == recs);
}

TEST_CASE("deduplication keeps first occurrences") {
  testing::SyntheticHeartOptions opt;
  opt.rows = 100;
  opt.duplicates = 30;
  const auto recs = testing::synthetic_heart(opt);
  CHECK(recs.size() == 130);
  const auto unique = deduplicate(recs);
  CHECK(unique.size() == 100);
  for (std::size_t i = 0; i < unique.size(); ++i)
    for (std::size_t j = i + 1; j < unique.size(); ++j) CHECK_FALSE(unique[i] == unique[j]);
  CHECK(unique.front() == recs.front());
}

TEST_CASE("imputation uses lower median and mode") {
  auto r = parse(
      "40,M,ATA,140,200,0,Normal,172,N,0,Up,0\n"
      "50,M,ATA,130,,0,Normal,150,N,1,Up,1\n"
      "60,F,NAP,120,300,1,ST,140,Y,2,Flat,1\n"
      "70,F,ASY,110,250,1,ST,130,Y,3,Flat,0\n"
      "45,,ASY,,,0,,120,N,,Flat,0\n");
  const ImputeStats s = fit_imputer(r);
  CHECK(s.fill[static_cast<std::size_t>(Column::Cholesterol)] == 250);
  CHECK(s.fill[static_cast<std::size_t>(Column::RestingBP)] == 120);
  CHECK(s.fill[static_cast<std::size_t>(Column::Oldpeak)] == 1);
  // Sex ties 2-2 between M and F; "F" sorts first.
  CHECK(s.fill[static_cast<std::size_t>(Column::Sex)] == 1);
  CHECK(s.fill[static_cast<std::size_t>(Column::RestingECG)] == 0);
  const auto filled = apply_imputer(r, s);
  for (const auto& rec : filled)
    for (const auto& f : rec.fields) CHECK(f.has_value());
  auto empty = parse("40,M,ATA,140,,0,Normal,172,N,0,Up,0\n");
  CHECK_THROWS(fit_imputer(empty));
}

TEST_CASE("ordinal and one-hot encodings") {
  const auto recs = impute_missing(testing::synthetic_heart({40, 0.5, 0, 0.0, 3}));
  const FeatureMatrix o = encode_features(recs, EncodingMode::Ordinal);
  CHECK(o.cols() == 11);
  CHECK(o.rows() == 40);
  CHECK(o.column_kinds[0] == ColumnKind::Continuous);
  CHECK(o.column_kinds[1] == ColumnKind::Binary);
  CHECK(o.column_kinds[2] == ColumnKind::Ordinal);
  CHECK(o.column_names[10] == "ST_Slope");
  const FeatureMatrix h = encode_features(recs, EncodingMode::OneHot);
  CHECK(h.cols() == 11 - 3 + 4 + 3 + 3);
  const std::size_t a = h.column_index("ChestPainType=ASY");
  const std::size_t t = h.column_index("ChestPainType=TA");
  for (std::size_t r = 0; r < h.rows(); ++r) {
    double s = 0;
    for (std::size_t c = a; c <= t; ++c) s += h.values.at(r, c);
    CHECK(s == 1.0);
  }
  CHECK_THROWS_AS(h.column_index("ChestPainType"), ParameterError);
  CHECK_NOTHROW(o.validate());
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{1, 2, 3, 4, 10};
  CHECK(quantile_sorted(v, 0.0) == 1);
  CHECK(quantile_sorted(v, 0.25) == 2);
  CHECK(quantile_sorted(v, 0.5) == 3);
  CHECK(quantile_sorted(v, 0.9) == doctest::Approx(7.6));
  CHECK(quantile_sorted(v, 1.0) == 10);
}

TEST_CASE("iqr capping touches only continuous columns") {
  FeatureMatrix m;
  m.values = Tensor::from_rows({{1, 0}, {2, 1}, {3, 0}, {4, 1}, {100, 0}});
  m.labels = {0, 1, 0, 1, 0};
  m.column_names = {"x", "b"};
  m.column_kinds = {ColumnKind::Continuous, ColumnKind::Binary};
  const FeatureMatrix c = cap_outliers_iqr(m);
  CHECK(c.values.at(4, 0) == doctest::Approx(4 + 1.5 * 2));
  CHECK(c.values.at(0, 0) == 1);
  CHECK(c.values.at(3, 1) == 1);
  CHECK_THROWS_AS(cap_outliers_iqr(m, std::vector<std::size_t>{1}), ParameterError);
}

TEST_CASE("min-max scaling") {
  FeatureMatrix m;
  m.values = Tensor::from_rows({{1, 5}, {3, 5}, {2, 5}});
  m.labels = {0, 1, 0};
  m.column_names = {"a", "c"};
  m.column_kinds = {ColumnKind::Continuous, ColumnKind::Continuous};
  auto [s, state] = scale_minmax(m);
  CHECK(s.values.at(0, 0) == 0.0);
  CHECK(s.values.at(1, 0) == 1.0);
  CHECK(s.values.at(2, 0) == 0.5);
  CHECK(s.values.at(0, 1) == 0.0);
  FeatureMatrix other = m;
  other.values.at(0, 0) = 5;
  CHECK(apply_minmax(other, state).values.at(0, 0) == 2.0);
}

TEST_CASE("smote balances with interpolated minority rows") {
  FeatureMatrix m;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) {
    rows.push_back({static_cast<double>(i), 0.0});
    m.labels.push_back(0);
  }
  for (int i = 0; i < 8; ++i) {
    rows.push_back({100.0 + i, 1.0 + i});
    m.labels.push_back(1);
  }
  m.values = Tensor::from_rows(rows);
  m.column_names = {"a", "b"};
  m.column_kinds = {ColumnKind::Continuous, ColumnKind::Continuous};
  const FeatureMatrix b = smote_balance(m, 3, 1);
  CHECK(b.rows() == 60);
  CHECK(std::count(b.labels.begin(), b.labels.end(), 1) == 30);
  for (std::size_t r = 38; r < 60; ++r) {
    CHECK(b.labels[r] == 1);
    CHECK(b.values.at(r, 0) >= 100.0);
    CHECK(b.values.at(r, 0) <= 107.0);
    CHECK(b.values.at(r, 1) == doctest::Approx(b.values.at(r, 0) - 99.0));
  }
  CHECK(smote_balance(m, 3, 1) == b);
  CHECK_THROWS_AS(smote_balance(m, 8, 1), ParameterError);
}

TEST_CASE("interaction columns") {
  FeatureMatrix m;
  m.values = Tensor::from_rows({{2, 3}, {4, 5}});
  m.labels = {0, 1};
  m.column_names = {"a", "b"};
  m.column_kinds = {ColumnKind::Continuous, ColumnKind::Continuous};
  const FeatureMatrix x = add_interactions(m, {{"a", "b"}});
  CHECK(x.column_names.back() == "a*b");
  CHECK(x.values.at(1, 2) == 20);
}

TEST_CASE("stratified split preserves class ratios") {
  std::vector<int> labels;
  for (int i = 0; i < 918; ++i) labels.push_back(i % 9 < 5 ? 1 : 0);
  const auto [train, test] = stratified_split_indices(labels, 0.8, 42);
  CHECK(train.size() + test.size() == 918);
  CHECK(train.size() == 734);
  std::set<std::size_t> all(train.begin(), train.end());
  for (std::size_t i : test) CHECK(all.insert(i).second);
  auto pos = [&](const std::vector<std::size_t>& idx) {
    return static_cast<double>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == 1; })) /
           static_cast<double>(idx.size());
  };
  CHECK(std::abs(pos(train) - pos(test)) < 0.01);
  CHECK(stratified_split_indices(labels, 0.8, 42) == std::make_pair(train, test));
  CHECK(stratified_split_indices(labels, 0.8, 43).first != train);
  CHECK_THROWS(stratified_split_indices(labels, 1.0, 1));
}

TEST_CASE("stratified folds partition the rows") {
  std::vector<int> labels;
  for (int i = 0; i < 103; ++i) labels.push_back(i % 3 == 0 ? 1 : 0);
  const auto folds = stratified_folds(labels, 10, 5);
  REQUIRE(folds.size() == 10);
  std::vector<int> seen(103, 0);
  for (const auto& f : folds) {
    CHECK(f.train.size() + f.test.size() == 103);
    CHECK(f.test.size() >= 10);
    CHECK(f.test.size() <= 11);
    for (std::size_t i : f.test) ++seen[i];
    const auto pos = std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return labels[i] == 1; });
    CHECK(pos >= 3);
    CHECK(pos <= 4);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK_THROWS(stratified_folds(labels, 1, 5));
  CHECK_THROWS(stratified_folds(labels, 200, 5));
}

TEST_CASE("pipeline fits statistics on the training rows only") {
  testing::SyntheticHeartOptions opt;
  opt.rows = 300;
  opt.duplicates = 20;
  opt.missing_rate = 0.02;
  const auto raw = testing::synthetic_heart(opt);
  PipelineConfig cfg;
  cfg.baseline_steps = 100;
  const PreparedData d = prepare(raw, cfg);
  CHECK(d.raw_count == 320);
  CHECK(d.unique_count <= 300);
  CHECK(d.train.rows() + d.test.rows() == d.unique_count);
  CHECK(d.train.cols() == 12);
  CHECK(d.train.column_names.back() == "BaselineProb");
  for (std::size_t c = 0; c < 11; ++c) {
    const auto col = d.train.column(c);
    CHECK(*std::min_element(col.begin(), col.end()) == 0.0);
    CHECK(*std::max_element(col.begin(), col.end()) == doctest::Approx(1.0));
  }
  CHECK_NOTHROW(d.train.validate());
  CHECK_NOTHROW(d.test.validate());
  const PreparedData again = prepare(raw, cfg);
  CHECK(again.train == d.train);
  CHECK(again.test == d.test);

  const auto manifest = dataset_manifest(d, cfg);
  CHECK(manifest.at("preprocessor").contains("scaler"));
  CHECK(manifest.at("rows").at("raw") == 320);
  nlohmann::json j = cfg;
  CHECK(j.get<PipelineConfig>() == cfg);

  PipelineConfig plain = cfg;
  plain.augment_baseline = false;
  plain.smote = true;
  plain.interactions = true;
  const PreparedData p = prepare(raw, plain);
  CHECK(p.train.cols() == 13);
  CHECK(std::count(p.train.labels.begin(), p.train.labels.end(), 1) * 2 ==
        static_cast<long>(p.train.rows()));
  CHECK(p.test.rows() == d.test.rows());
}
