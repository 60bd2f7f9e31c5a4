#include "kacq/train/crossval.hpp"

#include "kacq/error.hpp"

namespace kacq::train {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"maP", "maR", "maF1", "accuracy",
                                                 "roc_auc", "mcc", "kappa"};
  return names;
}

double metric_value(const metrics::MetricsReport& r, const std::string& name) {
  if (name == "maP") return r.ma_precision;
  if (name == "maR") return r.ma_recall;
  if (name == "maF1") return r.ma_f1;
  if (name == "accuracy") return r.accuracy;
  if (name == "roc_auc") return r.roc_auc;
  if (name == "mcc") return r.mcc;
  if (name == "kappa") return r.kappa;
  throw ParameterError("unknown metric '" + name + "'");
}

std::map<std::string, metrics::Summary> summarize_reports(
    const std::vector<metrics::MetricsReport>& reports) {
  std::map<std::string, metrics::Summary> out;
  if (reports.empty()) return out;
  for (const auto& name : metric_names()) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(metric_value(r, name));
    out[name] = metrics::summarize(v);
  }
  return out;
}

std::vector<double> CvResult::metric(const std::string& name) const {
  std::vector<double> v;
  for (const auto& f : folds) v.push_back(metric_value(f.test, name));
  return v;
}

nlohmann::json CvResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& f : folds) {
    rows.push_back({{"fold", f.fold},
                    {"train_rows", f.train_rows},
                    {"test_rows", f.test_rows},
                    {"metrics", metrics::to_json(f.test)},
                    {"epochs", f.history.epochs.size()},
                    {"best_epoch", f.history.best_epoch ? nlohmann::json(*f.history.best_epoch)
                                                        : nlohmann::json(nullptr)}});
  }
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [name, sum] : summary) s[name] = {{"mean", sum.mean}, {"std", sum.std}};
  return {{"folds", rows}, {"summary", s}};
}

std::uint64_t derived_seed(std::uint64_t root, std::string_view purpose, std::size_t index) {
  return RngStream(root, stream_id(purpose)).child(index).next_u64();
}

CvResult cross_validate(const models::ModelSpec& spec, const std::vector<dataset::RawRecord>& records,
                        const dataset::PipelineConfig& pipeline, std::size_t k,
                        const TrainConfig& config, std::uint64_t seed) {
  const auto folds = dataset::stratified_folds(dataset::record_labels(records), k, seed);
  CvResult result;
  std::vector<metrics::MetricsReport> reports;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      dataset::PipelineConfig pc = pipeline;
      pc.seed = derived_seed(seed, "fold-pipeline", f);
      const auto data = dataset::prepare_split(records, folds[f].train, folds[f].test, pc);
      models::ModelSpec fold_spec = spec;
      fold_spec.hp.n_features = data.train.cols();
      models::Model model = models::Model::build(fold_spec, derived_seed(seed, "fold-model", f));
      TrainConfig tc = config;
      tc.seed = derived_seed(seed, "fold-train", f);
      CvFold fold;
      fold.fold = f;
      fold.train_rows = data.train.rows();
      fold.test_rows = data.test.rows();
      fold.history = fit(model, LabeledData::from(data.train), std::nullopt, tc);
      const auto probs = model.predict(data.test.values);
      fold.test = metrics::evaluate(models::class1_scores(probs), data.test.labels);
      reports.push_back(fold.test);
      result.folds.push_back(std::move(fold));
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  }
  result.summary = summarize_reports(reports);
  return result;
}

}  // namespace kacq::train
