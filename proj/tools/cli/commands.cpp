#include "commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>

#include "io.hpp"
#include "kacq/ndcore/format.hpp"
#include "kacq/conformal/conformal.hpp"
#include "kacq/error.hpp"
#include "kacq/explain/explain.hpp"
#include "kacq/metrics/metrics.hpp"
#include "kacq/train/crossval.hpp"
#include "kacq/train/train.hpp"

namespace kacq::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

void log(const std::string& msg) { std::cerr << "[kacq] " << msg << std::endl; }

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty() || !std::filesystem::is_regular_file(p)) {
    throw UsageError(std::string(what) + " '" + p.string() + "' not found; pass --" +
                     (std::string(what) == "data file" ? "data" : "inputs") + " with an existing file");
  }
}

void write_manifest(OutputDir& out, const RunConfig& config,
                    const std::vector<std::filesystem::path>& inputs) {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& p : inputs) {
    if (std::filesystem::is_regular_file(p)) {
      in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    }
  }
  const nlohmann::json manifest = {{"tool", "kacq"},
                                   {"version", kVersion},
                                   {"command", config.command},
                                   {"seed", config.seed},
                                   {"config", config.to_json()},
                                   {"inputs", in},
                                   {"outputs", out.digests()}};
  write_json(out.path("manifest_" + config.command + ".json"), manifest);
}

std::string to_csv_text(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream s;
  writer(s);
  return s.str();
}

nlohmann::json report_row(const metrics::MetricsReport& r) { return metrics::to_json(r); }

const char* kReportHeader = "maP,maR,maF1,accuracy,roc_auc,mcc,kappa,tp,fp,fn,tn";

void write_report_fields(std::ostream& out, const metrics::MetricsReport& r) {
  out << r.ma_precision << ',' << r.ma_recall << ',' << r.ma_f1 << ',' << r.accuracy << ','
      << r.roc_auc << ',' << r.mcc << ',' << r.kappa << ',' << r.confusion.tp << ','
      << r.confusion.fp << ',' << r.confusion.fn << ',' << r.confusion.tn;
}

struct Trained {
  models::Model model;
  train::History history;
};

Trained train_model(const models::ModelSpec& spec, const dataset::FeatureMatrix& train_m,
                    const train::TrainConfig& tc, std::uint64_t seed, const std::string& label) {
  models::Model model = models::Model::build(spec, seed);
  log(label + ": " + models::to_string(spec.kind) + " with " +
      std::to_string(model.parameter_count()) + " parameters");
  auto history = train::fit(model, train::LabeledData::from(train_m), std::nullopt, tc,
                            [&](const train::EpochRecord& e, const models::Model&) {
                              std::ostringstream s;
                              s << label << " epoch " << e.epoch << " loss " << e.train_loss
                                << " val_acc " << e.val_accuracy << " lr " << e.learning_rate;
                              log(s.str());
                              return true;
                            });
  return {std::move(model), std::move(history)};
}

void write_evaluation(OutputDir& out, const models::Model& model, const dataset::FeatureMatrix& test) {
  const auto probs = model.predict(test.values);
  const auto scores = models::class1_scores(probs);
  const auto report = metrics::evaluate(scores, test.labels);
  nlohmann::json j = report_row(report);
  j["model"] = models::to_string(model.spec().kind);
  j["parameters"] = model.parameter_count();
  j["test_rows"] = test.rows();
  out.write_json("report.json", j);
  out.write("roc.csv", to_csv_text([&](std::ostream& s) {
              metrics::write_roc_csv(s, metrics::roc_curve(scores, test.labels));
            }));
  out.write("calibration.csv", to_csv_text([&](std::ostream& s) {
              metrics::write_calibration_csv(s, metrics::calibration_curve(scores, test.labels));
            }));
  std::ostringstream pred;
  shortest_doubles(pred) << "row,p0,p1,score,label\n";
  for (std::size_t i = 0; i < test.rows(); ++i) {
    pred << i << ',' << probs.at(i, 0) << ',' << probs.at(i, 1) << ',' << scores[i] << ','
         << test.labels[i] << '\n';
  }
  out.write("predictions.csv", pred.str());
}

}  // namespace

models::ModelSpec resolve_spec(const models::ModelSpec& spec, std::size_t n_features) {
  models::ModelSpec s = spec;
  s.hp.n_features = n_features;
  if (s.kind == models::ModelKind::KacqMlp) s.hp = models::mlp_matched_hyperparams(s.hp, s.variant);
  if (s.kind == models::ModelKind::Vqc) {
    std::size_t q = 1;
    while ((std::size_t{1} << q) < n_features) ++q;
    s.ansatz.n_qubits = std::max(s.ansatz.n_qubits, q);
  }
  return s;
}

dataset::PreparedData load_and_prepare(const RunConfig& config) {
  require_file(config.data, "data file");
  const auto records = dataset::load_records(config.data, config.pipeline.load);
  auto data = dataset::prepare(records, config.pipeline);
  log("data: " + std::to_string(data.raw_count) + " rows, " + std::to_string(data.unique_count) +
      " unique, train " + std::to_string(data.train.rows()) + " x " +
      std::to_string(data.train.cols()) + ", test " + std::to_string(data.test.rows()));
  return data;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int cmd_preprocess(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  OutputDir out(config.out);
  out.write("train.csv", to_csv_text([&](std::ostream& s) { dataset::write_matrix_csv(s, data.train); }));
  out.write("test.csv", to_csv_text([&](std::ostream& s) { dataset::write_matrix_csv(s, data.test); }));
  out.write_json("dataset_manifest.json", dataset::dataset_manifest(data, config.pipeline));
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_train(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  const auto spec = resolve_spec(config.model, data.train.cols());
  auto trained = train_model(spec, data.train, config.train, config.seed, "train");
  OutputDir out(config.out);
  const nlohmann::json extra = {{"config", config.to_json()}, {"data_sha256", sha256_file(config.data)}};
  models::save_checkpoint(trained.model, out.path("checkpoint"), extra);
  out.record("checkpoint");
  out.write_json("history.json", trained.history.to_json(config.train.record_wall_clock));
  out.write("history.csv", to_csv_text([&](std::ostream& s) { trained.history.write_csv(s); }));
  write_evaluation(out, trained.model, data.test);
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_evaluate(const RunConfig& config) {
  const auto dir = config.checkpoint.empty() ? config.out / "checkpoint" : config.checkpoint;
  if (!std::filesystem::is_regular_file(dir / "manifest.json")) {
    throw UsageError("checkpoint '" + dir.string() + "' not found; pass --checkpoint <dir> from a train run");
  }
  nlohmann::json extra;
  const models::Model model = models::load_checkpoint(dir, &extra);
  RunConfig effective = config;
  if (extra.contains("config")) {
    const RunConfig trained = RunConfig::from_json(extra.at("config"));
    effective.pipeline = trained.pipeline;
  }
  const auto data = load_and_prepare(effective);
  if (data.test.cols() != model.spec().hp.n_features) {
    throw Error("checkpoint expects " + std::to_string(model.spec().hp.n_features) +
                " features but the prepared data has " + std::to_string(data.test.cols()));
  }
  OutputDir out(config.out);
  write_evaluation(out, model, data.test);
  write_manifest(out, effective, {config.data, dir / "manifest.json", dir / "params.bin"});
  return 0;
}

int cmd_crossval(const RunConfig& config) {
  require_file(config.data, "data file");
  const auto records = dataset::deduplicate(dataset::load_records(config.data, config.pipeline.load));
  log("crossval: " + std::to_string(config.folds) + " folds over " + std::to_string(records.size()) + " rows");
  models::ModelSpec spec = config.model;
  if (spec.kind == models::ModelKind::KacqMlp || spec.kind == models::ModelKind::Vqc) {
    // Widths depend on the prepared width; resolve once with the full-data width.
    const auto probe = dataset::prepare(records, config.pipeline);
    spec = resolve_spec(spec, probe.train.cols());
  }
  const auto result = train::cross_validate(spec, records, config.pipeline, config.folds, config.train, config.seed);
  OutputDir out(config.out);
  out.write_json("crossval.json", result.to_json());
  std::ostringstream csv;
  shortest_doubles(csv) << "fold," << kReportHeader << '\n';
  for (const auto& f : result.folds) {
    csv << f.fold << ',';
    write_report_fields(csv, f.test);
    csv << '\n';
  }
  for (const char* stat : {"mean", "std"}) {
    csv << stat;
    for (const auto& name : train::metric_names()) {
      const auto& s = result.summary.at(name);
      csv << ',' << (std::string(stat) == "mean" ? s.mean : s.std);
    }
    csv << ",,,,\n";
  }
  out.write("crossval.csv", csv.str());
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_ablate(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  std::vector<models::AblationRow> rows;
  for (const auto& row : models::ablation_rows()) {
    if (config.variants.empty() ||
        std::find(config.variants.begin(), config.variants.end(), row.name) != config.variants.end()) {
      rows.push_back(row);
    }
  }
  for (const auto& v : config.variants) {
    if (std::none_of(rows.begin(), rows.end(), [&](const auto& r) { return r.name == v; })) {
      throw UsageError("unknown ablation variant '" + v + "'");
    }
  }
  struct Result {
    std::size_t params = 0;
    metrics::MetricsReport report;
    std::size_t epochs = 0;
  };
  std::vector<Result> results(rows.size());
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    models::ModelSpec spec = config.model;
    spec.kind = rows[i].kind;
    spec.variant = rows[i].variant;
    spec = resolve_spec(spec, data.train.cols());
    auto trained = train_model(spec, data.train, config.train, config.seed, rows[i].name);
    results[i].params = trained.model.parameter_count();
    results[i].epochs = trained.history.epochs.size();
    results[i].report = metrics::evaluate(models::class1_scores(trained.model.predict(data.test.values)),
                                          data.test.labels);
  });
  OutputDir out(config.out);
  nlohmann::json j = nlohmann::json::array();
  std::ostringstream csv;
  shortest_doubles(csv) << "variant,parameters,epochs," << kReportHeader << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nlohmann::json row = report_row(results[i].report);
    row["variant"] = rows[i].name;
    row["parameters"] = results[i].params;
    row["epochs"] = results[i].epochs;
    j.push_back(row);
    csv << rows[i].name << ',' << results[i].params << ',' << results[i].epochs << ',';
    write_report_fields(csv, results[i].report);
    csv << '\n';
  }
  out.write_json("ablation.json", j);
  out.write("ablation.csv", csv.str());
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_benchmark_vqc(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  struct Cell {
    qsim::AnsatzKind kind;
    std::size_t layers;
  };
  std::vector<Cell> cells;
  for (auto kind : {qsim::AnsatzKind::MERA, qsim::AnsatzKind::MPS, qsim::AnsatzKind::TTN}) {
    for (std::size_t l = 1; l <= 4; ++l) cells.push_back({kind, l});
  }
  struct Result {
    std::size_t params = 0;
    metrics::MetricsReport report;
    double final_loss = 0.0;
    std::string error;
  };
  std::vector<Result> results(cells.size());
  const auto train_data = train::LabeledData::from(data.train);
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    try {
      models::ModelSpec spec = config.model;
      spec.kind = models::ModelKind::Vqc;
      spec.ansatz.kind = cells[i].kind;
      spec.ansatz.layers = cells[i].layers;
      spec = resolve_spec(spec, data.train.cols());
      models::Model model = models::Model::build(spec, config.seed);
      const auto trace = train::train_vqc(model, train_data, config.vqc);
      results[i].final_loss = trace.back();
      results[i].params = model.parameter_count();
      results[i].report = metrics::evaluate(models::class1_scores(model.predict(data.test.values)),
                                            data.test.labels);
      log(std::string(qsim::to_string(cells[i].kind)) + "-" + std::to_string(cells[i].layers) +
          " accuracy " + std::to_string(results[i].report.accuracy));
    } catch (const kacq::Error& e) {
      results[i].error = e.what();
    }
  });
  OutputDir out(config.out);
  nlohmann::json j = nlohmann::json::array();
  std::ostringstream csv;
  shortest_doubles(csv) << "model,layers,parameters,final_loss," << kReportHeader << ",error\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name = boost::algorithm::to_upper_copy(std::string(qsim::to_string(cells[i].kind)));
    nlohmann::json row = results[i].error.empty() ? report_row(results[i].report) : nlohmann::json::object();
    row["model"] = name;
    row["layers"] = cells[i].layers;
    row["parameters"] = results[i].params;
    if (results[i].error.empty()) {
      row["final_loss"] = results[i].final_loss;
    } else {
      row["error"] = results[i].error;
    }
    j.push_back(row);
    csv << name << ',' << cells[i].layers << ',' << results[i].params << ',' << results[i].final_loss << ',';
    write_report_fields(csv, results[i].report);
    csv << ',' << results[i].error << '\n';
  }
  out.write_json("vqc_benchmark.json", j);
  out.write("vqc_benchmark.csv", csv.str());
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_conformal(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  const auto [fit_idx, cal_idx] = dataset::stratified_split_indices(
      data.train.labels, 1.0 - config.calibration_fraction, config.seed ^ stream_id("calibration"));
  const auto fit_m = data.train.select_rows(fit_idx);
  const auto cal_m = data.train.select_rows(cal_idx);
  const auto spec = resolve_spec(config.model, data.train.cols());
  auto trained = train_model(spec, fit_m, config.train, config.seed, "conformal");
  const Tensor cal_probs = trained.model.predict(cal_m.values);
  const Tensor test_probs = trained.model.predict(data.test.values);
  OutputDir out(config.out);
  nlohmann::json j = nlohmann::json::object();
  std::string csv;
  for (auto mode : {conformal::Mode::Standard, conformal::Mode::Mondrian}) {
    const auto report = conformal::run(cal_probs, cal_m.labels, test_probs, data.test.labels, config.alphas, mode);
    j[conformal::to_string(mode)] = report.to_json();
    const auto text = to_csv_text([&](std::ostream& s) { conformal::write_report_csv(s, report); });
    csv += csv.empty() ? text : text.substr(text.find('\n') + 1);
    const auto cal = conformal::calibrate(cal_probs, cal_m.labels, mode);
    out.write(std::string("scores_") + conformal::to_string(mode) + ".csv",
              to_csv_text([&](std::ostream& s) {
                conformal::write_score_histogram_csv(s, cal, 20, config.alphas);
              }));
  }
  j["calibration_rows"] = cal_m.rows();
  j["test_rows"] = data.test.rows();
  out.write_json("conformal.json", j);
  out.write("conformal.csv", csv);
  write_manifest(out, config, {config.data});
  return 0;
}

int cmd_explain(const RunConfig& config) {
  const auto data = load_and_prepare(config);
  std::optional<models::Model> model;
  if (!config.checkpoint.empty()) {
    model.emplace(models::load_checkpoint(config.checkpoint));
  } else {
    const auto spec = resolve_spec(config.model, data.train.cols());
    model.emplace(train_model(spec, data.train, config.train, config.seed, "explain").model);
  }
  if (config.explain_index >= data.test.rows()) {
    throw UsageError("--index " + std::to_string(config.explain_index) + " is out of range (test set has " +
                     std::to_string(data.test.rows()) + " rows)");
  }
  const auto x = data.test.values.row(config.explain_index);
  const auto f = explain::model_score_fn(*model);
  const auto means = explain::column_means(data.train.values);
  const auto& names = data.train.column_names;
  OutputDir out(config.out);
  nlohmann::json j = {{"index", config.explain_index}, {"label", data.test.labels[config.explain_index]}};
  if (x.size() <= explain::kMaxExactFeatures) {
    const auto exact = explain::shapley_exact(f, x, means);
    j["shapley_exact"] = explain::to_json(exact, names);
    out.write("shapley.csv", to_csv_text([&](std::ostream& s) { explain::write_attribution_csv(s, exact, names); }));
  }
  const auto sampled = explain::shapley_sampled(f, x, means, config.shapley_permutations, config.seed);
  j["shapley_sampled"] = explain::to_json(sampled, names);
  out.write("shapley_sampled.csv",
            to_csv_text([&](std::ostream& s) { explain::write_attribution_csv(s, sampled, names); }));
  explain::LimeConfig lc;
  lc.samples = config.lime_samples;
  lc.seed = config.seed;
  j["lime"] = explain::to_json(explain::lime_explain(f, x, data.train, lc), names);
  out.write_json("explain.json", j);
  write_manifest(out, config, {config.data});
  return 0;
}

namespace {

std::vector<std::pair<std::string, std::vector<double>>> read_ttest_inputs(const RunConfig& config) {
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& input : config.inputs) {
    const std::filesystem::path p(input);
    require_file(p, "input file");
    std::ifstream in(p);
    if (p.extension() == ".json") {
      const auto j = nlohmann::json::parse(in);
      std::vector<double> v;
      for (const auto& f : j.at("folds")) v.push_back(f.at("metrics").at(config.metric).get<double>());
      series.emplace_back(p.parent_path().filename().string().empty() ? p.stem().string()
                                                                        : p.parent_path().filename().string(),
                          v);
      continue;
    }
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    boost::algorithm::split(header, line, boost::is_any_of(","));
    const std::size_t first = series.size();
    for (auto& h : header) series.emplace_back(boost::algorithm::trim_copy(h), std::vector<double>{});
    while (std::getline(in, line)) {
      if (boost::algorithm::trim_copy(line).empty()) continue;
      std::vector<std::string> cells;
      boost::algorithm::split(cells, line, boost::is_any_of(","));
      if (cells.size() != header.size()) throw UsageError(input + ": ragged row '" + line + "'");
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::string cell = boost::algorithm::trim_copy(cells[c]);
        double v = 0.0;
        const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || end != cell.data() + cell.size()) {
          throw UsageError(input + ": '" + cell + "' is not a number");
        }
        series[first + c].second.push_back(v);
      }
    }
  }
  return series;
}

}  // namespace

int cmd_ttest(const RunConfig& config) {
  const auto series = read_ttest_inputs(config);
  if (series.size() < 2) {
    throw UsageError("ttest needs at least two series (a crossval.json per model or a CSV with one column per model)");
  }
  const std::size_t m = series.size() - 1;
  const double alpha = metrics::bonferroni_alpha(0.05, m);
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  shortest_doubles(csv) << "reference,other,t,p,cohens_d,df,significant\n";
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto r = metrics::paired_t_test(series[0].second, series[i].second);
    nlohmann::json row = metrics::to_json(r);
    row["reference"] = series[0].first;
    row["other"] = series[i].first;
    row["significant"] = r.p < alpha;
    rows.push_back(row);
    csv << series[0].first << ',' << series[i].first << ',' << r.t << ',' << r.p << ',' << r.cohens_d
        << ',' << r.df << ',' << (r.p < alpha ? 1 : 0) << '\n';
  }
  OutputDir out(config.out);
  out.write_json("ttest.json", {{"metric", config.metric}, {"alpha", 0.05}, {"comparisons", m},
                                {"alpha_adjusted", alpha}, {"tests", rows}});
  out.write("ttest.csv", csv.str());
  std::vector<std::filesystem::path> inputs(config.inputs.begin(), config.inputs.end());
  write_manifest(out, config, inputs);
  return 0;
}

}  // namespace kacq::cli
