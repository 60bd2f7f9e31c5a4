#include "kacq/dataset/pipeline.hpp"

#include <algorithm>

#include "kacq/error.hpp"
#include "kacq/models/loss.hpp"
#include "kacq/models/model.hpp"
#include "kacq/ndcore/optim.hpp"

namespace kacq::dataset {

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : c.interaction_pairs) pairs.push_back({a, b});
  j = {{"sentinel_zero_missing", c.load.sentinel_zero_missing},
       {"encoding", c.encoding == EncodingMode::Ordinal ? "ordinal" : "one_hot"},
       {"cap_outliers", c.cap_outliers},
       {"smote", c.smote},
       {"smote_k", c.smote_k},
       {"interactions", c.interactions},
       {"interaction_pairs", pairs},
       {"augment_baseline", c.augment_baseline},
       {"baseline_steps", c.baseline_steps},
       {"baseline_learning_rate", c.baseline_learning_rate},
       {"train_ratio", c.train_ratio},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  PipelineConfig d;
  c.load.sentinel_zero_missing = j.value("sentinel_zero_missing", d.load.sentinel_zero_missing);
  const std::string enc = j.value("encoding", std::string("ordinal"));
  if (enc == "ordinal") {
    c.encoding = EncodingMode::Ordinal;
  } else if (enc == "one_hot") {
    c.encoding = EncodingMode::OneHot;
  } else {
    throw ParameterError("unknown encoding '" + enc + "' (expected ordinal or one_hot)");
  }
  c.cap_outliers = j.value("cap_outliers", d.cap_outliers);
  c.smote = j.value("smote", d.smote);
  c.smote_k = j.value("smote_k", d.smote_k);
  c.interactions = j.value("interactions", d.interactions);
  c.interaction_pairs = d.interaction_pairs;
  if (j.contains("interaction_pairs")) {
    c.interaction_pairs.clear();
    for (const auto& p : j.at("interaction_pairs")) {
      c.interaction_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
  }
  c.augment_baseline = j.value("augment_baseline", d.augment_baseline);
  c.baseline_steps = j.value("baseline_steps", d.baseline_steps);
  c.baseline_learning_rate = j.value("baseline_learning_rate", d.baseline_learning_rate);
  c.train_ratio = j.value("train_ratio", d.train_ratio);
  c.seed = j.value("seed", d.seed);
}

Preprocessor Preprocessor::fit(const std::vector<RawRecord>& train, const PipelineConfig& config) {
  if (train.empty()) throw ParameterError("preprocessor: empty training partition");
  Preprocessor p;
  p.encoding = config.encoding;
  p.impute = fit_imputer(train);
  FeatureMatrix m = encode_features(apply_imputer(train, p.impute), config.encoding);
  if (config.cap_outliers) {
    p.iqr = fit_iqr(m, m.continuous_columns());
    m = apply_iqr(m, *p.iqr);
  }
  p.scaler = fit_minmax(m);
  if (config.interactions) p.interactions = config.interaction_pairs;
  return p;
}

FeatureMatrix Preprocessor::transform(const std::vector<RawRecord>& records) const {
  FeatureMatrix m = encode_features(apply_imputer(records, impute), encoding);
  if (iqr) m = apply_iqr(m, *iqr);
  m = apply_minmax(m, scaler);
  return add_interactions(m, interactions);
}

nlohmann::json Preprocessor::to_json() const {
  nlohmann::json fills = nlohmann::json::object();
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    fills[std::string(column_info(c).name)] = impute.fill[c];
  }
  nlohmann::json iqr_json = nullptr;
  if (iqr) {
    iqr_json = nlohmann::json::array();
    for (std::size_t i = 0; i < iqr->columns.size(); ++i) {
      iqr_json.push_back({{"column", iqr->columns[i]}, {"lower", iqr->lower[i]}, {"upper", iqr->upper[i]}});
    }
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : interactions) pairs.push_back({a, b});
  return {{"encoding", encoding == EncodingMode::Ordinal ? "ordinal" : "one_hot"},
          {"impute_fill", fills},
          {"iqr", iqr_json},
          {"scaler", {{"min", scaler.min}, {"max", scaler.max}}},
          {"interactions", pairs}};
}

std::vector<int> record_labels(const std::vector<RawRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.heart_disease);
  return y;
}

namespace {

FeatureMatrix append_column(const FeatureMatrix& m, const std::vector<double>& column,
                            const std::string& name) {
  FeatureMatrix out;
  out.labels = m.labels;
  out.scaler = m.scaler;
  out.column_names = m.column_names;
  out.column_names.push_back(name);
  out.column_kinds = m.column_kinds;
  out.column_kinds.push_back(ColumnKind::Continuous);
  out.values = Tensor({m.rows(), m.cols() + 1});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.values.row(i);
    auto dst = out.values.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[m.cols()] = column[i];
  }
  return out;
}

std::vector<RawRecord> gather(const std::vector<RawRecord>& records,
                              const std::vector<std::size_t>& idx) {
  std::vector<RawRecord> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= records.size()) throw ParameterError("record index out of range");
    out.push_back(records[i]);
  }
  return out;
}

}  // namespace

std::pair<FeatureMatrix, FeatureMatrix> augment_with_baseline(const FeatureMatrix& train,
                                                              const FeatureMatrix& test,
                                                              std::uint64_t seed,
                                                              std::size_t steps,
                                                              double learning_rate) {
  if (train.rows() == 0) throw ParameterError("augment_with_baseline: empty training matrix");
  if (test.cols() != train.cols()) throw ShapeError("augment_with_baseline: column count mismatch");
  models::ModelSpec spec;
  spec.kind = models::ModelKind::Logistic;
  spec.hp.n_features = train.cols();
  models::Model baseline = models::Model::build(spec, seed);
  AdamState adam;
  adam.learning_rate = learning_rate;
  auto params = baseline.params();
  for (std::size_t step = 0; step < steps; ++step) {
    ForwardContext ctx;
    ctx.mode = Mode::Train;
    CachePtr cache;
    const Tensor probs = baseline.forward(train.values, ctx, &cache);
    const auto loss = models::bce_loss(probs, train.labels);
    if (!std::isfinite(loss.value)) {
      throw NumericError("baseline training diverged at step " + std::to_string(step));
    }
    baseline.zero_grad();
    baseline.backward(cache.get(), loss.grad);
    adam_step(adam, params);
  }
  const auto train_col = models::class1_scores(baseline.predict(train.values));
  const auto test_col = test.rows() == 0 ? std::vector<double>{}
                                         : models::class1_scores(baseline.predict(test.values));
  return {append_column(train, train_col, "BaselineProb"),
          append_column(test, test_col, "BaselineProb")};
}

PreparedData prepare_split(const std::vector<RawRecord>& records,
                           const std::vector<std::size_t>& train_idx,
                           const std::vector<std::size_t>& test_idx, const PipelineConfig& config) {
  PreparedData out;
  out.raw_count = records.size();
  out.unique_count = records.size();
  out.train_rows = train_idx;
  out.test_rows = test_idx;
  const auto train_records = gather(records, train_idx);
  const auto test_records = gather(records, test_idx);
  out.preprocessor = Preprocessor::fit(train_records, config);
  out.train = out.preprocessor.transform(train_records);
  out.test = out.preprocessor.transform(test_records);
  if (config.smote) out.train = smote_balance(out.train, config.smote_k, config.seed);
  if (config.augment_baseline) {
    std::tie(out.train, out.test) =
        augment_with_baseline(out.train, out.test, config.seed, config.baseline_steps,
                              config.baseline_learning_rate);
  }
  out.train.validate();
  out.test.validate();
  return out;
}

PreparedData prepare(const std::vector<RawRecord>& raw, const PipelineConfig& config) {
  const auto unique = deduplicate(raw);
  const auto [train_idx, test_idx] =
      stratified_split_indices(record_labels(unique), config.train_ratio, config.seed);
  PreparedData out = prepare_split(unique, train_idx, test_idx, config);
  out.raw_count = raw.size();
  out.unique_count = unique.size();
  return out;
}

nlohmann::json dataset_manifest(const PreparedData& data, const PipelineConfig& config) {
  nlohmann::json tables = nlohmann::json::object();
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const auto& info = column_info(c);
    if (info.categories.empty()) continue;
    nlohmann::json codes = nlohmann::json::object();
    for (std::size_t k = 0; k < info.categories.size(); ++k) {
      codes[std::string(info.categories[k])] = k;
    }
    tables[std::string(info.name)] = codes;
  }
  auto count_pos = [](const FeatureMatrix& m) {
    return static_cast<std::size_t>(std::count(m.labels.begin(), m.labels.end(), 1));
  };
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : data.train.column_kinds) kinds.push_back(to_string(k));
  return {{"config", config},
          {"seed", config.seed},
          {"encoding_tables", tables},
          {"preprocessor", data.preprocessor.to_json()},
          {"columns", data.train.column_names},
          {"column_kinds", kinds},
          {"rows",
           {{"raw", data.raw_count},
            {"unique", data.unique_count},
            {"train", data.train.rows()},
            {"test", data.test.rows()},
            {"train_positive", count_pos(data.train)},
            {"test_positive", count_pos(data.test)}}}};
}

}  // namespace kacq::dataset
