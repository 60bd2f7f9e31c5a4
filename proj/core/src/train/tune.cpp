#include "kacq/train/tune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kacq/error.hpp"
#include "kacq/train/crossval.hpp"

namespace kacq::train {

std::vector<std::size_t> IntRange::values() const {
  if (step == 0 || lo > hi) throw ParameterError("invalid search range");
  std::vector<std::size_t> out;
  for (std::size_t v = lo; v <= hi; v += step) out.push_back(v);
  return out;
}

std::size_t SearchSpace::size() const {
  std::size_t n = 1;
  for (const auto& [name, range] : dims) n *= range.values().size();
  return n;
}

SearchSpace SearchSpace::defaults(models::ModelKind kind) {
  using models::ModelKind;
  const IntRange lstm{32, 128, 32}, dense{128, 512, 64}, kan{32, 256, 32};
  const IntRange conv{32, 128, 32}, qdense{16, 256, 32};
  SearchSpace s;
  switch (kind) {
    case ModelKind::BilstmKannet:
      s.dims = {{"lstm_units", lstm}, {"dense_units", dense}, {"kan_units_1", kan}, {"kan_units_2", kan}};
      break;
    case ModelKind::QcKannet:
      s.dims = {{"conv_filters", conv}, {"kan_units_1", kan}, {"kan_units_2", kan}};
      break;
    case ModelKind::QdenseKannet:
      s.dims = {{"qdense_units_1", qdense}, {"qdense_units_2", qdense}, {"qdense_units_out", qdense}};
      break;
    case ModelKind::KacqDcnn:
    case ModelKind::KacqMlp:
      s.dims = {{"lstm_units", lstm},         {"dense_units", dense},
                {"kan_units_1", kan},         {"kan_units_2", kan},
                {"qdense_units_1", qdense},   {"qdense_units_2", qdense},
                {"qdense_units_out", qdense}};
      break;
    case ModelKind::Vqc:
    case ModelKind::Logistic:
      throw ParameterError("no search space for " + models::to_string(kind));
  }
  return s;
}

namespace {

std::size_t* field(models::Hyperparams& hp, const std::string& name) {
  if (name == "lstm_units") return &hp.lstm_units;
  if (name == "dense_units") return &hp.dense_units;
  if (name == "kan_units_1") return &hp.kan_units_1;
  if (name == "kan_units_2") return &hp.kan_units_2;
  if (name == "qdense_units_1") return &hp.qdense_units_1;
  if (name == "qdense_units_2") return &hp.qdense_units_2;
  if (name == "qdense_units_out") return &hp.qdense_units_out;
  if (name == "conv_filters") return &hp.conv_filters;
  throw ParameterError("unknown tunable hyperparameter '" + name + "'");
}

}  // namespace

void set_hyperparam(models::Hyperparams& hp, const std::string& name, std::size_t value) {
  *field(hp, name) = value;
}

std::size_t get_hyperparam(const models::Hyperparams& hp, const std::string& name) {
  auto copy = hp;
  return *field(copy, name);
}

std::vector<models::Hyperparams> sample_configurations(const models::Hyperparams& base,
                                                       const SearchSpace& space, std::size_t count,
                                                       std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> grids;
  for (const auto& [name, range] : space.dims) grids.push_back(range.values());
  const std::size_t total = space.size();
  std::vector<std::size_t> picks;
  if (total <= count) {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), 0);
  } else {
    RngStream rng(seed, stream_id("tune-sample"));
    std::set<std::size_t> seen;
    while (picks.size() < count) {
      const auto p = static_cast<std::size_t>(rng.below(total));
      if (seen.insert(p).second) picks.push_back(p);
    }
  }
  std::vector<models::Hyperparams> out;
  for (std::size_t p : picks) {
    models::Hyperparams hp = base;
    for (std::size_t d = 0; d < grids.size(); ++d) {
      set_hyperparam(hp, space.dims[d].first, grids[d][p % grids[d].size()]);
      p /= grids[d].size();
    }
    out.push_back(hp);
  }
  return out;
}

TuneResult tune(const models::Hyperparams& base, const SearchSpace& space, const TuneConfig& config,
                const TrialEvaluator& evaluator) {
  if (config.trials < 1) throw ParameterError("tune: budget must allow at least one trial");
  if (config.rung_epochs.empty()) throw ParameterError("tune: at least one rung is required");
  if (!(config.keep_fraction > 0.0 && config.keep_fraction <= 1.0)) {
    throw ParameterError("tune: keep_fraction must lie in (0, 1]");
  }
  if (!evaluator) throw ParameterError("tune: missing evaluator");
  const auto configs = sample_configurations(base, space, config.trials, config.seed);
  std::vector<std::size_t> alive(configs.size());
  std::iota(alive.begin(), alive.end(), 0);
  TuneResult result;
  std::vector<double> scores(configs.size());
  for (std::size_t rung = 0; rung < config.rung_epochs.size(); ++rung) {
    const std::size_t epochs = config.rung_epochs[rung];
    for (std::size_t t : alive) {
      scores[t] = evaluator(configs[t], epochs, t);
      result.log.push_back({t, rung, epochs, configs[t], scores[t]});
    }
    std::stable_sort(alive.begin(), alive.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (rung + 1 < config.rung_epochs.size()) {
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(config.keep_fraction * static_cast<double>(alive.size()))));
      alive.resize(std::min(keep, alive.size()));
      std::sort(alive.begin(), alive.end());
    }
  }
  result.best = configs[alive.front()];
  result.best_score = scores[alive.front()];
  return result;
}

nlohmann::json TuneResult::to_json() const {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& r : log) {
    trials.push_back({{"trial", r.trial}, {"rung", r.rung}, {"epochs", r.epochs},
                      {"hyperparams", r.hp}, {"score", r.score}});
  }
  return {{"best", best}, {"best_score", best_score}, {"trials", trials}};
}

TrialEvaluator fit_evaluator(const models::ModelSpec& spec, LabeledData train, LabeledData val,
                             const TrainConfig& config) {
  return [spec, train = std::move(train), val = std::move(val), config](
             const models::Hyperparams& hp, std::size_t epochs, std::size_t trial) {
    models::ModelSpec s = spec;
    s.hp = hp;
    models::Model model = models::Model::build(s, derived_seed(config.seed, "trial-model", trial));
    TrainConfig tc = config;
    tc.max_epochs = epochs;
    tc.early_stop_patience = 3;
    tc.lr_patience = std::min<std::size_t>(tc.lr_patience, 3);
    const History h = fit(model, train, val, tc);
    return h.best_epoch ? h.epochs[*h.best_epoch].val_accuracy : 0.0;
  };
}

}  // namespace kacq::train
