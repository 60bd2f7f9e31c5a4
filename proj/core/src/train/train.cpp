#include "kacq/train/train.hpp"
#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "kacq/error.hpp"
#include "kacq/kan/kan_layers.hpp"
#include "kacq/metrics/metrics.hpp"
#include "kacq/ndcore/optim.hpp"

namespace kacq::train {

LabeledData LabeledData::from(const dataset::FeatureMatrix& m) {
  m.validate();
  return {m.values, m.labels};
}

LabeledData LabeledData::subset(const std::vector<std::size_t>& rows) const {
  const std::size_t width = size() == 0 ? 0 : x.size() / size();
  Shape s = x.shape();
  s[0] = rows.size();
  LabeledData out{Tensor(s), {}};
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw ParameterError("subset: row index out of range");
    std::copy(x.ptr() + rows[i] * width, x.ptr() + (rows[i] + 1) * width, out.x.ptr() + i * width);
    out.y.push_back(y[rows[i]]);
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ParameterError("lr_factor must lie in (0, 1)");
  if (lr_patience == 0 || early_stop_patience == 0) throw ParameterError("patiences must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ParameterError("validation_fraction must lie in (0, 1)");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"max_epochs", c.max_epochs},
       {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"lr_factor", c.lr_factor},
       {"lr_patience", c.lr_patience},
       {"early_stop_patience", c.early_stop_patience},
       {"seed", c.seed},
       {"validation_fraction", c.validation_fraction},
       {"grid_updates", c.grid_updates},
       {"grid_probe_rows", c.grid_probe_rows},
       {"record_wall_clock", c.record_wall_clock}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr_factor = j.value("lr_factor", d.lr_factor);
  c.lr_patience = j.value("lr_patience", d.lr_patience);
  c.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
  c.seed = j.value("seed", d.seed);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.grid_updates = j.value("grid_updates", d.grid_updates);
  c.grid_probe_rows = j.value("grid_probe_rows", d.grid_probe_rows);
  c.record_wall_clock = j.value("record_wall_clock", d.record_wall_clock);
}

std::vector<double> History::learning_rates() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.learning_rate);
  return out;
}

nlohmann::json History::to_json(bool include_wall_clock) const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"lr", e.learning_rate},
                    {"train_loss", e.train_loss},
                    {"train_accuracy", e.train_accuracy},
                    {"val_loss", e.val_loss},
                    {"val_accuracy", e.val_accuracy},
                    {"improved", e.improved},
                    {"lr_reduced", e.lr_reduced},
                    {"grid_updated", e.grid_updated}});
  }
  nlohmann::json j = {{"epochs", rows},
                      {"best_epoch", best_epoch ? nlohmann::json(*best_epoch) : nlohmann::json(nullptr)},
                      {"stopped_early", stopped_early}};
  if (best_epoch) j["best_val_accuracy"] = epochs[*best_epoch].val_accuracy;
  if (include_wall_clock) j["wall_seconds"] = wall_seconds;
  return j;
}

void History::write_csv(std::ostream& out) const {
  out << "epoch,lr,train_loss,train_accuracy,val_loss,val_accuracy,improved,lr_reduced\n";
  shortest_doubles(out);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.learning_rate << ',' << e.train_loss << ',' << e.train_accuracy
        << ',' << e.val_loss << ',' << e.val_accuracy << ',' << int(e.improved) << ','
        << int(e.lr_reduced) << '\n';
  }
}

std::pair<double, double> evaluate_loss(const models::Model& model, const LabeledData& data) {
  if (data.size() == 0) throw ParameterError("evaluate_loss: empty data");
  const Tensor probs = model.predict(data.x);
  const auto loss = bce_loss(probs, data.y);
  const auto preds = models::predict_labels(probs);
  return {loss.value, metrics::accuracy(data.y, preds)};
}

std::vector<std::size_t> update_kan_grids(models::Model& model, const Tensor& probe) {
  std::map<const Layer*, kan::ActivationRange> ranges;
  ForwardContext ctx;
  ctx.observer = [&](const Layer& layer, const Tensor& input) {
    if (dynamic_cast<const kan::DenseKan*>(&layer) == nullptr &&
        dynamic_cast<const kan::Conv1dKan*>(&layer) == nullptr) {
      return;
    }
    const auto r = kan::activation_range(input);
    auto it = ranges.find(&layer);
    if (it == ranges.end()) {
      ranges.emplace(&layer, r);
    } else {
      it->second.min = std::min(it->second.min, r.min);
      it->second.max = std::max(it->second.max, r.max);
    }
  };
  model.forward(probe, ctx, nullptr);
  if (ranges.empty()) return {};

  std::vector<const Param*> changed;
  for (Layer* layer : model.layers()) {
    auto it = ranges.find(layer);
    if (it == ranges.end() || !(it->second.max > it->second.min)) continue;
    kan::EdgeFunctionBank* bank = nullptr;
    if (auto* d = dynamic_cast<kan::DenseKan*>(layer)) bank = &d->bank();
    if (auto* c = dynamic_cast<kan::Conv1dKan*>(layer)) bank = &c->bank();
    if (bank->update_grid(it->second.min, it->second.max, model.spec().hp.max_grid_size)) {
      changed.push_back(&bank->coefficients());
    }
  }
  std::vector<std::size_t> out;
  const auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (std::find(changed.begin(), changed.end(), params[i]) != changed.end()) out.push_back(i);
  }
  return out;
}

namespace {

void sync_moments(AdamState& adam, const std::vector<Param*>& params) {
  for (std::size_t i = 0; i < params.size() && i < adam.first_moment.size(); ++i) {
    if (adam.first_moment[i].shape() != params[i]->value.shape()) {
      reset_moments(adam, i, params[i]->value.shape());
    }
  }
}

Tensor probe_rows(const LabeledData& data, std::size_t limit) {
  const std::size_t n = std::min(limit, data.size());
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i * data.size() / n;
  return data.subset(rows).x;
}

}  // namespace

History fit(models::Model& model, const LabeledData& train, std::optional<LabeledData> val,
            const TrainConfig& config, const EpochCallback& callback) {
  config.validate();
  History history;
  if (config.max_epochs == 0) return history;
  if (train.size() == 0) throw ParameterError("fit: empty training set");

  LabeledData fit_set = train;
  if (!val) {
    const auto [keep, hold] =
        dataset::stratified_split_indices(train.y, 1.0 - config.validation_fraction, config.seed);
    fit_set = train.subset(keep);
    val = train.subset(hold);
  }
  if (val->size() == 0) throw ParameterError("fit: empty validation set");

  const auto start = std::chrono::steady_clock::now();
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  const RngStream shuffle_root(config.seed, stream_id("shuffle"));
  const RngStream dropout_root(config.seed, stream_id("dropout"));

  double best_acc = -std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_loss_improved = 0;
  std::size_t since_lr_change = 0;
  models::ModelState best_state = model.snapshot();
  const std::size_t n = fit_set.size();

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = adam.learning_rate;
    if (config.grid_updates) {
      const auto resized = update_kan_grids(model, probe_rows(fit_set, config.grid_probe_rows));
      auto params = model.params();
      for (std::size_t i : resized) reset_moments(adam, i, params[i]->value.shape());
      rec.grid_updated = !resized.empty();
    }

    RngStream order_rng = shuffle_root.child(epoch);
    RngStream dropout_rng = dropout_root.child(epoch);
    const auto order = order_rng.permutation(n);
    auto params = model.params();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b0 = 0, batch = 0; b0 < n; b0 += config.batch_size, ++batch) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(b0),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b0 + config.batch_size)));
      const LabeledData mb = fit_set.subset(rows);
      ForwardContext ctx;
      ctx.mode = Mode::Train;
      ctx.rng = &dropout_rng;
      CachePtr cache;
      const Tensor probs = model.forward(mb.x, ctx, &cache);
      const auto loss = bce_loss(probs, mb.y);
      if (!std::isfinite(loss.value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch));
      }
      loss_sum += loss.value * static_cast<double>(rows.size());
      const auto preds = models::predict_labels(probs);
      for (std::size_t i = 0; i < rows.size(); ++i) correct += preds[i] == mb.y[i] ? 1 : 0;
      model.zero_grad();
      model.backward(cache.get(), loss.grad);
      adam_step(adam, params);
    }
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    std::tie(rec.val_loss, rec.val_accuracy) = evaluate_loss(model, *val);

    if (rec.val_accuracy > best_acc + 1e-6) {
      best_acc = rec.val_accuracy;
      best_state = model.snapshot();
      history.best_epoch = epoch;
      rec.improved = true;
    }
    if (rec.val_loss < best_loss - 1e-6) {
      best_loss = rec.val_loss;
      since_loss_improved = 0;
      since_lr_change = 0;
    } else {
      ++since_loss_improved;
      ++since_lr_change;
    }
    const bool stop = since_loss_improved >= config.early_stop_patience;
    if (!stop && since_lr_change >= config.lr_patience) {
      model.restore(best_state);
      sync_moments(adam, model.params());
      adam.learning_rate *= config.lr_factor;
      since_lr_change = 0;
      rec.lr_reduced = true;
    }
    history.epochs.push_back(rec);
    if (stop) {
      history.stopped_early = true;
      break;
    }
    if (callback && !callback(rec, model)) break;
  }
  model.restore(best_state);
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return history;
}

std::vector<double> train_vqc(models::Model& model, const LabeledData& data,
                              const VqcTrainConfig& config) {
  if (model.spec().kind != models::ModelKind::Vqc) throw ParameterError("train_vqc: not a VQC model");
  if (data.size() == 0) throw ParameterError("train_vqc: empty data");
  auto params = model.params();
  std::vector<Tensor*> values;
  for (Param* p : params) values.push_back(&p->value);

  auto loss_and_grad = [&](bool with_grad) {
    ForwardContext ctx;
    ctx.mode = with_grad ? Mode::Train : Mode::Infer;
    CachePtr cache;
    const Tensor probs = model.forward(data.x, ctx, with_grad ? &cache : nullptr);
    const auto loss = square_loss(probs, data.y);
    if (!std::isfinite(loss.value)) throw NumericError("train_vqc: non-finite loss");
    if (with_grad) {
      model.zero_grad();
      model.backward(cache.get(), loss.grad);
    }
    return loss.value;
  };

  std::vector<double> trace;
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  NesterovState nesterov;
  nesterov.learning_rate = config.learning_rate;
  nesterov.momentum = config.momentum;
  for (std::size_t step = 0; step < config.steps; ++step) {
    if (config.optimizer == VqcOptimizer::Adam) {
      trace.push_back(loss_and_grad(true));
      adam_step(adam, params);
      continue;
    }
    trace.push_back(loss_and_grad(false));
    std::vector<Tensor> saved;
    for (Tensor* v : values) saved.push_back(*v);
    auto look = nesterov_lookahead(nesterov, values);
    for (std::size_t i = 0; i < values.size(); ++i) *values[i] = std::move(look[i]);
    loss_and_grad(true);
    for (std::size_t i = 0; i < values.size(); ++i) *values[i] = std::move(saved[i]);
    std::vector<const Tensor*> grads;
    for (Param* p : params) grads.push_back(&p->grad);
    nesterov_step(nesterov, values, grads);
  }
  trace.push_back(loss_and_grad(false));
  return trace;
}

}  // namespace kacq::train
