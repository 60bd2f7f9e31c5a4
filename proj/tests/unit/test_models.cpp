#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "kacq/error.hpp"
#include "kacq/kan/kan_layers.hpp"
#include "kacq/models/layers.hpp"
#include "kacq/models/loss.hpp"
#include "kacq/models/model.hpp"
#include "kacq/ndcore/gradcheck.hpp"
#include "layer_check.hpp"

using namespace kacq;
using namespace kacq::models;

namespace {

Hyperparams tiny_hp(std::size_t features = 4) {
  Hyperparams hp;
  hp.n_features = features;
  hp.lstm_units = 2;
  hp.dense_units = 5;
  hp.kan_units_1 = 4;
  hp.kan_units_2 = 3;
  hp.qdense_units_1 = 2;
  hp.qdense_units_2 = 4;
  hp.qdense_units_out = 3;
  hp.conv_filters = 2;
  hp.n_qubits = 2;
  hp.join_units = 4;
  return hp;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kacq_models_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("every model kind builds and emits probabilities") {
  RngStream rng(1);
  for (ModelKind kind : {ModelKind::BilstmKannet, ModelKind::QdenseKannet, ModelKind::QcKannet,
                         ModelKind::KacqDcnn, ModelKind::KacqMlp, ModelKind::Vqc, ModelKind::Logistic}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.hp = tiny_hp(6);
    CHECK(model_kind_from_string(to_string(kind)) == kind);
    const Model m = Model::build(spec, 3);
    CHECK(m.parameter_count() > 0);
    const Tensor x = testing::random_tensor({5, 6}, rng, 0, 1);
    const Tensor p = m.predict(x);
    REQUIRE(p.shape() == Shape{5, 2});
    for (double v : p.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto s = class1_scores(p);
    const auto labels = predict_labels(p);
    for (std::size_t i = 0; i < 5; ++i) CHECK(labels[i] == (s[i] > 0.5 ? 1 : 0));
  }
  CHECK_THROWS_AS(model_kind_from_string("transformer"), ParameterError);
}

TEST_CASE("building is deterministic in the seed") {
  ModelSpec spec;
  spec.hp = tiny_hp();
  const Model a = Model::build(spec, 11), b = Model::build(spec, 11), c = Model::build(spec, 12);
  CHECK(a.snapshot().values == b.snapshot().values);
  CHECK(a.snapshot().values != c.snapshot().values);
}

TEST_CASE("input shape validation") {
  ModelSpec spec;
  spec.hp = tiny_hp();
  const Model m = Model::build(spec, 1);
  CHECK_THROWS_AS(m.predict(Tensor({2, 5})), ShapeError);
  CHECK_NOTHROW(m.predict(Tensor({2, 4, 1}, 0.5)));
}

TEST_CASE("hyperparameter validation and json") {
  Hyperparams hp;
  CHECK_NOTHROW(hp.validate());
  Hyperparams bad = hp;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = hp;
  bad.n_qubits = 0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  nlohmann::json j = hp;
  CHECK(j.get<Hyperparams>() == hp);
  ModelSpec spec;
  spec.kind = ModelKind::Vqc;
  spec.ansatz = {qsim::AnsatzKind::TTN, 4, 3, 1};
  spec.variant.recurrent = Recurrent::Lstm2;
  nlohmann::json js = spec;
  CHECK(js.get<ModelSpec>() == spec);
}

TEST_CASE("mlp matching keeps the parameter budget within five percent") {
  for (std::size_t features : {12, 20}) {
    ModelSpec kan;
    kan.hp.n_features = features;
    ModelSpec mlp = kan;
    mlp.kind = ModelKind::KacqMlp;
    mlp.hp = mlp_matched_hyperparams(kan.hp);
    const double pk = static_cast<double>(Model::build(kan, 1).parameter_count());
    const double pm = static_cast<double>(Model::build(mlp, 1).parameter_count());
    CHECK(std::abs(pm - pk) / pk < 0.05);
  }
}

TEST_CASE("ablation rows cover the study") {
  const auto rows = ablation_rows();
  CHECK(rows.size() == 10);
  CHECK(rows.front().name == "full");
  std::size_t mlp = 0;
  for (const auto& r : rows) mlp += r.kind == ModelKind::KacqMlp;
  CHECK(mlp == 1);
}

TEST_CASE("end-to-end gradient of small networks") {
  RngStream rng(2);
  for (ModelKind kind : {ModelKind::BilstmKannet, ModelKind::QdenseKannet, ModelKind::QcKannet,
                         ModelKind::KacqDcnn, ModelKind::Vqc, ModelKind::Logistic}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.hp = tiny_hp(6);
    spec.ansatz = {qsim::AnsatzKind::MPS, 3, 1, 1};
    Model m = Model::build(spec, 5);
    const Tensor x = testing::random_tensor({2, 6, 1}, rng, 0.05, 1);
    INFO(to_string(kind));
    CHECK(testing::check_layer(m.network(), x, 3).worst() < 1e-5);
  }
}

TEST_CASE("dropout is identity at inference and masks in training") {
  Dropout d(0.5);
  const Tensor x({4, 100}, 1.0);
  ForwardContext infer;
  CHECK(d.forward(x, infer, nullptr) == x);
  RngStream rng(3);
  ForwardContext train{Mode::Train, &rng, {}};
  CachePtr cache;
  const Tensor y = d.forward(x, train, &cache);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    zeros += v == 0.0;
  }
  CHECK(zeros > 150);
  CHECK(zeros < 250);
  const Tensor dx = d.backward(cache.get(), x);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(dx[i] == y[i]);
  ForwardContext missing{Mode::Train, nullptr, {}};
  CHECK_THROWS(d.forward(x, missing, nullptr));
}

TEST_CASE("losses and their gradients") {
  const Tensor p = Tensor::from_rows({{0.2, 0.7}, {0.9, 0.4}, {0.5, 0.5}});
  const std::vector<int> y{1, 0, 1};
  const LossValue l = bce_loss(p, y);
  double ref = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const double t = y[b];
    ref += t * std::log(p.at(b, 1)) + (1 - t) * std::log(1 - p.at(b, 1)) +
           (1 - t) * std::log(p.at(b, 0)) + t * std::log(1 - p.at(b, 0));
  }
  CHECK(l.value == doctest::Approx(-ref / 6).epsilon(1e-14));
  auto f = [&](const Tensor& q) { return bce_loss(q, y).value; };
  CHECK(relative_error(l.grad, finite_diff_gradient(f, p, 1e-7)) < 1e-7);

  const LossValue s = square_loss(p, y);
  CHECK(s.value == doctest::Approx((0.09 + 0.16 + 0.25) / 3));
  auto g = [&](const Tensor& q) { return square_loss(q, y).value; };
  CHECK(relative_error(s.grad, finite_diff_gradient(g, p)) < 1e-8);

  const Tensor saturated = Tensor::from_rows({{0.0, 1.0}});
  const LossValue z = bce_loss(saturated, std::vector<int>{1});
  CHECK(std::isfinite(z.value));
  CHECK(z.grad.at(0, 1) == 0.0);
}

TEST_CASE("checkpoints round trip bitwise") {
  ModelSpec spec;
  spec.hp = tiny_hp();
  Model m = Model::build(spec, 8);
  for (Layer* l : m.layers()) {
    if (auto* k = dynamic_cast<kan::DenseKan*>(l)) k->bank().update_grid(-2.5, 2.0, 12);
  }
  const auto dir = temp_dir("ckpt");
  save_checkpoint(m, dir, {{"note", "x"}});
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "params.bin"));
  nlohmann::json extra;
  const Model back = load_checkpoint(dir, &extra);
  CHECK(extra["note"] == "x");
  CHECK(back.spec() == m.spec());
  CHECK(back.snapshot().values == m.snapshot().values);
  RngStream rng(9);
  const Tensor x = testing::random_tensor({3, 4}, rng, 0, 1);
  CHECK(back.predict(x) == m.predict(x));
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_checkpoint(dir));
}

TEST_CASE("snapshot and restore") {
  ModelSpec spec;
  spec.kind = ModelKind::BilstmKannet;
  spec.hp = tiny_hp();
  Model m = Model::build(spec, 1);
  const ModelState s = m.snapshot();
  for (Param* p : m.params()) p->value.fill(0.1);
  m.restore(s);
  CHECK(m.snapshot().values == s.values);
}

TEST_CASE("vqc readout helper") {
  ModelSpec spec;
  spec.kind = ModelKind::Vqc;
  spec.hp.n_features = 4;
  spec.ansatz = {qsim::AnsatzKind::MPS, 2, 2, 1};
  const Model m = Model::build(spec, 2);
  const std::vector<double> x{0.1, 0.5, 0.3, 0.9};
  const Tensor p = m.predict(Tensor({1, 4}, x));
  CHECK(vqc_predict(m, x) == doctest::Approx(p.at(0, 1)).epsilon(1e-12));
}
