#include "kacq/models/model.hpp"

#include <cmath>
#include <fstream>

#include "kacq/error.hpp"
#include "kacq/kan/kan_layers.hpp"
#include "kacq/qsim/vqc.hpp"
#include "kacq/recurrent/lstm.hpp"

namespace kacq::models {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::BilstmKannet: return "bilstm_kannet";
    case ModelKind::QdenseKannet: return "qdense_kannet";
    case ModelKind::QcKannet: return "qc_kannet";
    case ModelKind::KacqDcnn: return "kacq_dcnn";
    case ModelKind::KacqMlp: return "kacq_mlp";
    case ModelKind::Vqc: return "vqc";
    case ModelKind::Logistic: return "logistic";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (ModelKind k : {ModelKind::BilstmKannet, ModelKind::QdenseKannet, ModelKind::QcKannet,
                      ModelKind::KacqDcnn, ModelKind::KacqMlp, ModelKind::Vqc,
                      ModelKind::Logistic}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown model kind '" + std::string(name) +
                       "' (expected bilstm_kannet, qdense_kannet, qc_kannet, kacq_dcnn, "
                       "kacq_mlp, vqc, logistic)");
}

void Hyperparams::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ParameterError(std::string("hyperparameter ") + name + " must be positive");
  };
  positive(n_features, "n_features");
  positive(lstm_units, "lstm_units");
  positive(dense_units, "dense_units");
  positive(kan_units_1, "kan_units_1");
  positive(kan_units_2, "kan_units_2");
  positive(qdense_units_1, "qdense_units_1");
  positive(qdense_units_2, "qdense_units_2");
  positive(qdense_units_out, "qdense_units_out");
  positive(conv_filters, "conv_filters");
  positive(n_qubits, "n_qubits");
  positive(quantum_layers, "quantum_layers");
  positive(entangle_range, "entangle_range");
  positive(grid_size, "grid_size");
  positive(join_units, "join_units");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ParameterError("hyperparameter dropout_rate must be in [0, 1)");
  }
  if (n_qubits > 12) throw ParameterError("hyperparameter n_qubits must be at most 12");
  if (max_grid_size < grid_size) {
    throw ParameterError("hyperparameter max_grid_size must be at least grid_size");
  }
}

void to_json(nlohmann::json& j, const Hyperparams& hp) {
  j = {{"n_features", hp.n_features},
       {"lstm_units", hp.lstm_units},
       {"dense_units", hp.dense_units},
       {"kan_units_1", hp.kan_units_1},
       {"kan_units_2", hp.kan_units_2},
       {"qdense_units_1", hp.qdense_units_1},
       {"qdense_units_2", hp.qdense_units_2},
       {"qdense_units_out", hp.qdense_units_out},
       {"conv_filters", hp.conv_filters},
       {"dropout_rate", hp.dropout_rate},
       {"n_qubits", hp.n_qubits},
       {"quantum_layers", hp.quantum_layers},
       {"entangle_range", hp.entangle_range},
       {"grid_size", hp.grid_size},
       {"join_units", hp.join_units},
       {"max_grid_size", hp.max_grid_size}};
}

void from_json(const nlohmann::json& j, Hyperparams& hp) {
  Hyperparams d;
  hp.n_features = j.value("n_features", d.n_features);
  hp.lstm_units = j.value("lstm_units", d.lstm_units);
  hp.dense_units = j.value("dense_units", d.dense_units);
  hp.kan_units_1 = j.value("kan_units_1", d.kan_units_1);
  hp.kan_units_2 = j.value("kan_units_2", d.kan_units_2);
  hp.qdense_units_1 = j.value("qdense_units_1", d.qdense_units_1);
  hp.qdense_units_2 = j.value("qdense_units_2", d.qdense_units_2);
  hp.qdense_units_out = j.value("qdense_units_out", d.qdense_units_out);
  hp.conv_filters = j.value("conv_filters", d.conv_filters);
  hp.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  hp.n_qubits = j.value("n_qubits", d.n_qubits);
  hp.quantum_layers = j.value("quantum_layers", d.quantum_layers);
  hp.entangle_range = j.value("entangle_range", d.entangle_range);
  hp.grid_size = j.value("grid_size", d.grid_size);
  hp.join_units = j.value("join_units", d.join_units);
  hp.max_grid_size = j.value("max_grid_size", d.max_grid_size);
}

namespace {

std::string recurrent_name(Recurrent r) {
  switch (r) {
    case Recurrent::BiLstm2: return "bilstm2";
    case Recurrent::Lstm2: return "lstm2";
    case Recurrent::BiLstm1: return "bilstm1";
    case Recurrent::None: return "none";
  }
  return "?";
}

Recurrent recurrent_from_name(const std::string& s) {
  for (Recurrent r : {Recurrent::BiLstm2, Recurrent::Lstm2, Recurrent::BiLstm1, Recurrent::None}) {
    if (recurrent_name(r) == s) return r;
  }
  throw ParameterError("unknown recurrent variant '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const Variant& v) {
  j = {{"recurrent", recurrent_name(v.recurrent)},
       {"classical_kan", v.classical_kan},
       {"quantum_kan", v.quantum_kan},
       {"quantum_layers", v.quantum_layers},
       {"dropout", v.dropout},
       {"embedding", v.embedding == qsim::Embedding::Angle ? "angle" : "amplitude"},
       {"ry_template", v.ry_template}};
}

void from_json(const nlohmann::json& j, Variant& v) {
  Variant d;
  v.recurrent = recurrent_from_name(j.value("recurrent", recurrent_name(d.recurrent)));
  v.classical_kan = j.value("classical_kan", d.classical_kan);
  v.quantum_kan = j.value("quantum_kan", d.quantum_kan);
  v.quantum_layers = j.value("quantum_layers", d.quantum_layers);
  v.dropout = j.value("dropout", d.dropout);
  const std::string e = j.value("embedding", std::string("amplitude"));
  if (e != "amplitude" && e != "angle") throw ParameterError("unknown embedding '" + e + "'");
  v.embedding = e == "angle" ? qsim::Embedding::Angle : qsim::Embedding::Amplitude;
  v.ry_template = j.value("ry_template", d.ry_template);
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = {{"kind", to_string(s.kind)},
       {"hyperparams", s.hp},
       {"variant", s.variant},
       {"ansatz",
        {{"kind", qsim::to_string(s.ansatz.kind)},
         {"n_qubits", s.ansatz.n_qubits},
         {"layers", s.ansatz.layers},
         {"entangle_range", s.ansatz.entangle_range}}}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  s.hp = j.value("hyperparams", Hyperparams{});
  s.variant = j.value("variant", Variant{});
  if (j.contains("ansatz")) {
    const auto& a = j.at("ansatz");
    s.ansatz.kind = qsim::ansatz_from_string(a.at("kind").get<std::string>());
    s.ansatz.n_qubits = a.at("n_qubits").get<std::size_t>();
    s.ansatz.layers = a.at("layers").get<std::size_t>();
    s.ansatz.entangle_range = a.at("entangle_range").get<std::size_t>();
  }
}

std::vector<AblationRow> ablation_rows() {
  std::vector<AblationRow> rows;
  rows.push_back({"full", ModelKind::KacqDcnn, {}});
  rows.push_back({"mlp", ModelKind::KacqMlp, {}});
  Variant v;
  v.recurrent = Recurrent::Lstm2;
  rows.push_back({"lstm", ModelKind::KacqDcnn, v});
  v = {};
  v.recurrent = Recurrent::BiLstm1;
  rows.push_back({"one_bilstm", ModelKind::KacqDcnn, v});
  v = {};
  v.recurrent = Recurrent::None;
  rows.push_back({"no_bilstm", ModelKind::KacqDcnn, v});
  v = {};
  v.classical_kan = false;
  rows.push_back({"no_classical_kan", ModelKind::KacqDcnn, v});
  v = {};
  v.quantum_kan = false;
  rows.push_back({"no_quantum_kan", ModelKind::KacqDcnn, v});
  v = {};
  v.quantum_layers = false;
  rows.push_back({"no_quantum_layers", ModelKind::KacqDcnn, v});
  v = {};
  v.dropout = false;
  rows.push_back({"no_dropout", ModelKind::KacqDcnn, v});
  v = {};
  v.embedding = qsim::Embedding::Angle;
  rows.push_back({"angle_embedding", ModelKind::KacqDcnn, v});
  return rows;
}

namespace {

class Builder {
 public:
  Builder(const Hyperparams& hp, const Variant& v, RngStream* rng) : hp_(hp), v_(v), rng_(rng) {
    grid_.grid_size = hp.grid_size;
  }

  std::unique_ptr<Layer> dense(std::size_t in, std::size_t out, Activation act) {
    auto d = std::make_unique<Dense>(in, out, act);
    if (rng_ != nullptr) {
      RngStream r = next();
      d->initialize(r);
    }
    return d;
  }

  std::unique_ptr<Layer> densekan(std::size_t in, std::size_t out) {
    auto k = std::make_unique<kan::DenseKan>(in, out, grid_);
    if (rng_ != nullptr) {
      RngStream r = next();
      k->bank().initialize(r);
    }
    return k;
  }

  std::unique_ptr<Layer> conv1dkan(std::size_t in_ch, std::size_t filters, std::size_t k,
                                   std::size_t s) {
    auto c = std::make_unique<kan::Conv1dKan>(in_ch, filters, k, s, grid_);
    if (rng_ != nullptr) {
      RngStream r = next();
      c->bank().initialize(r);
    }
    return c;
  }

  std::unique_ptr<Layer> hidden(std::size_t in, std::size_t out, bool use_kan) {
    return use_kan ? densekan(in, out) : dense(in, out, Activation::Relu);
  }

  void dropout(Sequential& seq) {
    if (v_.dropout && hp_.dropout_rate > 0.0) seq.emplace<Dropout>(hp_.dropout_rate);
  }

  std::unique_ptr<Layer> lstm(std::size_t in, std::size_t units) {
    auto l = std::make_unique<recurrent::Lstm>(in, units, true);
    if (rng_ != nullptr) {
      RngStream r = next();
      l->cell().initialize(r);
    }
    return l;
  }

  std::unique_ptr<Layer> bilstm(std::size_t in, std::size_t units) {
    auto l = std::make_unique<recurrent::BiLstm>(in, units, true);
    if (rng_ != nullptr) {
      RngStream r1 = next();
      l->forward_cell().cell().initialize(r1);
      RngStream r2 = next();
      l->backward_cell().cell().initialize(r2);
    }
    return l;
  }

  qsim::QuantumBlockConfig quantum_config() const {
    qsim::QuantumBlockConfig c;
    c.n_qubits = hp_.n_qubits;
    c.layers = hp_.quantum_layers;
    c.entangle_range = hp_.entangle_range;
    c.embedding = v_.embedding;
    c.ry_template = v_.ry_template;
    return c;
  }

  std::unique_ptr<Layer> quantum_split() {
    std::vector<std::unique_ptr<Layer>> branches;
    for (int i = 0; i < 3; ++i) {
      auto q = std::make_unique<qsim::QuantumBlock>(quantum_config());
      if (rng_ != nullptr) {
        RngStream r = next();
        q->initialize(r);
      }
      branches.push_back(std::move(q));
    }
    return std::make_unique<SplitConcat>(std::move(branches));
  }

  std::size_t quantum_input_width() const { return 3 * quantum_config().input_width(); }

  std::unique_ptr<Sequential> classical_channel() {
    auto seq = std::make_unique<Sequential>();
    const std::size_t t = hp_.n_features, u = hp_.lstm_units;
    std::size_t width = 1;
    switch (v_.recurrent) {
      case Recurrent::BiLstm2:
        seq->add(bilstm(1, u));
        seq->add(bilstm(2 * u, u));
        width = 2 * u;
        break;
      case Recurrent::Lstm2:
        seq->add(lstm(1, u));
        seq->add(lstm(u, u));
        width = u;
        break;
      case Recurrent::BiLstm1:
        seq->add(bilstm(1, u));
        width = 2 * u;
        break;
      case Recurrent::None:
        break;
    }
    seq->emplace<Flatten>();
    seq->add(dense(t * width, hp_.dense_units, Activation::Relu));
    dropout(*seq);
    seq->add(hidden(hp_.dense_units, hp_.kan_units_1, v_.classical_kan));
    dropout(*seq);
    seq->add(hidden(hp_.kan_units_1, hp_.kan_units_2, v_.classical_kan));
    dropout(*seq);
    return seq;
  }

  std::unique_ptr<Sequential> quantum_channel() {
    auto seq = std::make_unique<Sequential>();
    const bool kan = v_.quantum_kan;
    seq->add(hidden(1, hp_.qdense_units_1, kan));
    seq->emplace<Flatten>();
    dropout(*seq);
    seq->add(hidden(hp_.n_features * hp_.qdense_units_1, hp_.qdense_units_2, kan));
    dropout(*seq);
    const std::size_t pre = quantum_input_width();
    seq->add(kan ? densekan(hp_.qdense_units_2, pre) : dense(hp_.qdense_units_2, pre, Activation::Identity));
    std::size_t width = pre;
    if (v_.quantum_layers) {
      seq->add(quantum_split());
      width = 3 * hp_.n_qubits;
    }
    seq->add(hidden(width, hp_.qdense_units_out, kan));
    dropout(*seq);
    seq->add(hidden(hp_.qdense_units_out, hp_.kan_units_2, kan));
    dropout(*seq);
    return seq;
  }

  std::unique_ptr<Sequential> qc_kannet() {
    auto seq = std::make_unique<Sequential>();
    const std::size_t f = hp_.conv_filters;
    if (hp_.n_features < 3) throw ParameterError("qc_kannet: needs at least 3 input features");
    auto c1 = conv1dkan(1, f, 3, 2);
    const std::size_t l1 = static_cast<kan::Conv1dKan&>(*c1).output_length(hp_.n_features);
    if (l1 < 2) throw ParameterError("qc_kannet: input too short for the second convolution");
    seq->add(std::move(c1));
    auto c2 = conv1dkan(f, f, 2, 2);
    const std::size_t l2 = static_cast<kan::Conv1dKan&>(*c2).output_length(l1);
    seq->add(std::move(c2));
    seq->emplace<Flatten>();
    const std::size_t pre = quantum_input_width();
    seq->add(densekan(l2 * f, pre));
    std::size_t width = pre;
    if (v_.quantum_layers) {
      seq->add(quantum_split());
      width = 3 * hp_.n_qubits;
    }
    seq->add(densekan(width, hp_.kan_units_1));
    dropout(*seq);
    seq->add(densekan(hp_.kan_units_1, hp_.kan_units_2));
    dropout(*seq);
    seq->add(dense(hp_.kan_units_2, 2, Activation::Sigmoid));
    return seq;
  }

  RngStream next() { return rng_->child(counter_++); }

 private:
  const Hyperparams& hp_;
  const Variant& v_;
  RngStream* rng_;
  std::uint64_t counter_ = 0;
  kan::SplineGrid grid_;
};

std::unique_ptr<Sequential> build_network(const ModelSpec& spec, RngStream* rng) {
  spec.hp.validate();
  Variant variant = spec.variant;
  if (spec.kind == ModelKind::KacqMlp) {
    variant.classical_kan = false;
    variant.quantum_kan = false;
  }
  Builder b(spec.hp, variant, rng);
  const Hyperparams& hp = spec.hp;
  switch (spec.kind) {
    case ModelKind::BilstmKannet: {
      auto seq = b.classical_channel();
      seq->add(b.dense(hp.kan_units_2, 2, Activation::Sigmoid));
      return seq;
    }
    case ModelKind::QdenseKannet: {
      auto seq = b.quantum_channel();
      seq->add(b.dense(hp.kan_units_2, 2, Activation::Sigmoid));
      return seq;
    }
    case ModelKind::QcKannet:
      return b.qc_kannet();
    case ModelKind::KacqDcnn:
    case ModelKind::KacqMlp: {
      auto seq = std::make_unique<Sequential>();
      auto ch1 = b.classical_channel();
      auto ch2 = b.quantum_channel();
      seq->emplace<DualChannel>(std::move(ch1), std::move(ch2));
      seq->add(b.dense(2 * hp.kan_units_2, hp.join_units, Activation::Relu));
      seq->add(b.dense(hp.join_units, 2, Activation::Sigmoid));
      return seq;
    }
    case ModelKind::Vqc: {
      auto seq = std::make_unique<Sequential>();
      seq->emplace<Flatten>();
      auto v = std::make_unique<qsim::VqcLayer>(spec.ansatz, hp.n_features, false);
      if (rng != nullptr) {
        RngStream r = b.next();
        v->initialize(r);
      }
      seq->add(std::move(v));
      return seq;
    }
    case ModelKind::Logistic: {
      auto seq = std::make_unique<Sequential>();
      seq->emplace<Flatten>();
      seq->add(b.dense(hp.n_features, 1, Activation::Sigmoid));
      seq->emplace<Complement>();
      return seq;
    }
  }
  throw ParameterError("build: unsupported model kind");
}

std::size_t count_params(const ModelSpec& spec) {
  auto net = build_network(spec, nullptr);
  std::size_t n = 0;
  for (const Param* p : net->params()) n += p->value.size();
  return n;
}

Hyperparams scaled(const Hyperparams& hp, double s) {
  auto sc = [s](std::size_t w) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(w) * s)));
  };
  Hyperparams out = hp;
  out.kan_units_1 = sc(hp.kan_units_1);
  out.kan_units_2 = sc(hp.kan_units_2);
  out.qdense_units_1 = sc(hp.qdense_units_1);
  out.qdense_units_2 = sc(hp.qdense_units_2);
  out.qdense_units_out = sc(hp.qdense_units_out);
  return out;
}

}  // namespace

Hyperparams mlp_matched_hyperparams(const Hyperparams& hp, const Variant& variant) {
  const double target =
      static_cast<double>(count_params({ModelKind::KacqDcnn, hp, variant, {}}));
  auto mlp_count = [&](double s) {
    return static_cast<double>(count_params({ModelKind::KacqMlp, scaled(hp, s), variant, {}}));
  };
  double lo = 0.01, hi = 1.0;
  while (mlp_count(hi) < target && hi < 1e4) hi *= 2.0;
  for (int it = 0; it < 40 && hi - lo > 1e-4; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mlp_count(mid) < target ? lo : hi) = mid;
  }
  const double c_lo = mlp_count(lo), c_hi = mlp_count(hi);
  const double s = std::abs(c_lo - target) <= std::abs(c_hi - target) ? lo : hi;
  const Hyperparams out = scaled(hp, s);
  const double rel = std::abs(mlp_count(s) - target) / target;
  if (rel > 0.05) {
    throw ParameterError("mlp_matched_hyperparams: cannot match parameter count within 5%");
  }
  return out;
}

Model::Model(ModelSpec spec, std::uint64_t seed, std::unique_ptr<Sequential> net)
    : spec_(std::move(spec)), seed_(seed), net_(std::move(net)) {}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  RngStream rng(seed, 0x6d6f64656cULL);
  return Model(spec, seed, build_network(spec, &rng));
}

Tensor Model::forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const {
  const std::size_t f = spec_.hp.n_features;
  if (x.rank() == 2 && x.dim(1) == f) {
    return forward_child(*net_, x.reshaped({x.dim(0), f, 1}), ctx, cache);
  }
  if (x.rank() == 3 && x.dim(1) == f && x.dim(2) == 1) return forward_child(*net_, x, ctx, cache);
  throw ShapeError("model: expected [batch x " + std::to_string(f) + "] or [batch x " +
                   std::to_string(f) + " x 1], got " + shape_string(x.shape()));
}

Tensor Model::predict(const Tensor& x) const {
  constexpr std::size_t kChunk = 256;
  if (x.rank() < 2) throw ShapeError("model: expected a batch of samples");
  const std::size_t n = x.dim(0), width = n == 0 ? 0 : x.size() / n;
  Tensor out({n, 2});
  ForwardContext ctx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    Shape s = x.shape();
    s[0] = len;
    Tensor chunk(s, std::vector<double>(x.ptr() + start * width, x.ptr() + (start + len) * width));
    const Tensor y = forward(chunk, ctx, nullptr);
    std::copy(y.ptr(), y.ptr() + y.size(), out.ptr() + start * 2);
  }
  return out;
}

void Model::backward(const LayerCache* cache, const Tensor& dprobs) {
  net_->backward(cache, dprobs);
}

std::vector<Param*> Model::params() { return net_->params(); }

std::vector<const Param*> Model::params() const {
  return static_cast<const Layer&>(*net_).params();
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : params()) n += p->value.size();
  return n;
}

void Model::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

std::vector<Layer*> Model::layers() { return flatten_layers(*net_); }

ModelState Model::snapshot() const {
  ModelState s;
  for (const Param* p : params()) s.values.push_back(p->value);
  for (Layer* l : flatten_layers(const_cast<Sequential&>(*net_))) s.layer_states.push_back(l->state());
  return s;
}

void Model::restore(const ModelState& state) {
  auto all = layers();
  if (state.layer_states.size() != all.size()) {
    throw SchemaError("model state: layer count mismatch (" +
                      std::to_string(state.layer_states.size()) + " vs " +
                      std::to_string(all.size()) + ")");
  }
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->load_state(state.layer_states[i]);
  auto ps = params();
  if (state.values.size() != ps.size()) throw SchemaError("model state: parameter count mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (state.values[i].shape() != ps[i]->value.shape()) {
      throw SchemaError("model state: parameter " + std::to_string(i) + " has shape " +
                        shape_string(state.values[i].shape()) + ", expected " +
                        shape_string(ps[i]->value.shape()));
    }
    ps[i]->value = state.values[i];
    ps[i]->zero_grad();
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& dir,
                     const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  const ModelState state = model.snapshot();
  nlohmann::json manifest;
  manifest["format"] = "kacq-checkpoint";
  manifest["version"] = 1;
  manifest["spec"] = model.spec();
  manifest["seed"] = model.seed();
  manifest["parameter_count"] = model.parameter_count();
  manifest["layer_states"] = state.layer_states;
  nlohmann::json table = nlohmann::json::array();
  const auto ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    table.push_back({{"name", ps[i]->name}, {"shape", ps[i]->value.shape()}});
  }
  manifest["params"] = table;
  manifest["extra"] = extra;

  const auto write_atomic = [&](const std::filesystem::path& target, auto&& writer) {
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp.string());
      writer(out);
      if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  };
  write_atomic(dir / "params.bin", [&](std::ostream& out) {
    for (const Tensor& t : state.values) write_blob(out, t);
  });
  write_atomic(dir / "manifest.json", [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
}

Model load_checkpoint(const std::filesystem::path& dir, nlohmann::json* extra) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("cannot open checkpoint manifest " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", std::string()) != "kacq-checkpoint") {
    throw SchemaError("not a kacq checkpoint: " + dir.string());
  }
  const ModelSpec spec = manifest.at("spec").get<ModelSpec>();
  Model model = Model::build(spec, manifest.at("seed").get<std::uint64_t>());
  ModelState state;
  state.layer_states = manifest.at("layer_states").get<std::vector<nlohmann::json>>();
  std::ifstream blobs(dir / "params.bin", std::ios::binary);
  if (!blobs) throw Error("cannot open " + (dir / "params.bin").string());
  for (std::size_t i = 0; i < manifest.at("params").size(); ++i) state.values.push_back(read_blob(blobs));
  model.restore(state);
  if (extra != nullptr) *extra = manifest.value("extra", nlohmann::json::object());
  return model;
}

std::vector<double> class1_scores(const Tensor& probs) {
  if (probs.rank() != 2 || probs.dim(1) != 2) {
    throw ShapeError("class1_scores: expected [batch x 2], got " + shape_string(probs.shape()));
  }
  std::vector<double> s(probs.dim(0));
  for (std::size_t b = 0; b < s.size(); ++b) {
    const double total = probs.at(b, 0) + probs.at(b, 1);
    s[b] = total > 0.0 ? probs.at(b, 1) / total : 0.5;
  }
  return s;
}

std::vector<int> predict_labels(const Tensor& probs, double tau) {
  const auto s = class1_scores(probs);
  std::vector<int> labels(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) labels[i] = s[i] > tau ? 1 : 0;
  return labels;
}

double vqc_predict(const Model& model, std::span<const double> x) {
  if (model.spec().kind != ModelKind::Vqc) throw ParameterError("vqc_predict: not a VQC model");
  Tensor in({1, x.size()}, std::vector<double>(x.begin(), x.end()));
  return model.predict(in).at(0, 1);
}

}  // namespace kacq::models
