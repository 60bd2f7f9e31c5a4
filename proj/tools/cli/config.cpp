#include "config.hpp"

#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kacq/error.hpp"

namespace kacq::cli {

void RunConfig::finalize() {
  pipeline.seed = seed;
  train.seed = seed;
  model.ansatz.n_qubits = model.hp.n_qubits;
  model.ansatz.layers = model.hp.quantum_layers;
  model.ansatz.entangle_range = model.hp.entangle_range;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json data_section = pipeline;
  data_section.erase("seed");
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : pipeline.interaction_pairs) pairs.push_back(a + "*" + b);
  data_section["interaction_pairs"] = pairs;

  nlohmann::json model_section = model.hp;
  model_section["kind"] = models::to_string(model.kind);
  model_section["ansatz"] = qsim::to_string(model.ansatz.kind);

  nlohmann::json train_section = train;
  train_section.erase("seed");

  return {{"run",
           {{"seed", seed},
            {"data", data.string()},
            {"out", out.string()},
            {"checkpoint", checkpoint.string()},
            {"threads", threads},
            {"alphas", alphas},
            {"folds", folds},
            {"metric", metric},
            {"explain_index", explain_index},
            {"shapley_permutations", shapley_permutations},
            {"lime_samples", lime_samples},
            {"calibration_fraction", calibration_fraction},
            {"variants", variants},
            {"inputs", inputs}}},
          {"data", data_section},
          {"model", model_section},
          {"variant", model.variant},
          {"train", train_section},
          {"vqc",
           {{"steps", vqc.steps},
            {"learning_rate", vqc.learning_rate},
            {"optimizer", vqc.optimizer == train::VqcOptimizer::Adam ? "adam" : "nesterov"},
            {"momentum", vqc.momentum}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  const auto& run = j.at("run");
  c.seed = run.value("seed", c.seed);
  c.data = run.value("data", c.data.string());
  c.out = run.value("out", c.out.string());
  c.checkpoint = run.value("checkpoint", c.checkpoint.string());
  c.threads = run.value("threads", c.threads);
  c.alphas = run.value("alphas", c.alphas);
  c.folds = run.value("folds", c.folds);
  c.metric = run.value("metric", c.metric);
  c.explain_index = run.value("explain_index", c.explain_index);
  c.shapley_permutations = run.value("shapley_permutations", c.shapley_permutations);
  c.lime_samples = run.value("lime_samples", c.lime_samples);
  c.calibration_fraction = run.value("calibration_fraction", c.calibration_fraction);
  c.variants = run.value("variants", c.variants);
  c.inputs = run.value("inputs", c.inputs);

  nlohmann::json data_section = j.at("data");
  if (data_section.contains("interaction_pairs")) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : data_section.at("interaction_pairs")) {
      const auto s = p.get<std::string>();
      const auto star = s.find('*');
      if (star == std::string::npos) throw UsageError("interaction pair '" + s + "' must look like A*B");
      pairs.push_back({s.substr(0, star), s.substr(star + 1)});
    }
    data_section["interaction_pairs"] = pairs;
  }
  c.pipeline = data_section.get<dataset::PipelineConfig>();

  const auto& m = j.at("model");
  c.model.kind = models::model_kind_from_string(m.value("kind", std::string("kacq_dcnn")));
  c.model.hp = m.get<models::Hyperparams>();
  c.model.ansatz.kind = qsim::ansatz_from_string(m.value("ansatz", std::string("mps")));
  c.model.variant = j.at("variant").get<models::Variant>();
  c.train = j.at("train").get<train::TrainConfig>();

  const auto& v = j.at("vqc");
  c.vqc.steps = v.value("steps", c.vqc.steps);
  c.vqc.learning_rate = v.value("learning_rate", c.vqc.learning_rate);
  c.vqc.momentum = v.value("momentum", c.vqc.momentum);
  const std::string opt = v.value("optimizer", std::string("adam"));
  if (opt != "adam" && opt != "nesterov") throw UsageError("vqc.optimizer must be adam or nesterov");
  c.vqc.optimizer = opt == "adam" ? train::VqcOptimizer::Adam : train::VqcOptimizer::Nesterov;
  c.finalize();
  return c;
}

namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

nlohmann::json parse_scalar(const std::string& text, const nlohmann::json& like,
                            const std::string& where) {
  try {
    if (like.is_boolean()) {
      const auto t = boost::algorithm::to_lower_copy(text);
      if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
      if (t == "false" || t == "0" || t == "no" || t == "off") return false;
      throw std::invalid_argument("not a boolean");
    }
    std::size_t used = 0;
    if (like.is_number_unsigned() || like.is_number_integer()) {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    return text;
  } catch (const std::exception&) {
    throw UsageError("config " + where + ": cannot parse '" + text + "' as " + like.type_name());
  }
}

}  // namespace

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  const auto j = config.to_json();
  bool first = true;
  for (const auto& section : {"run", "data", "model", "variant", "train", "vqc"}) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : j.at(section).items()) {
      out << key << " = ";
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) out << (i ? "," : "") << scalar_text(value[i]);
      } else {
        out << scalar_text(value);
      }
      out << '\n';
    }
  }
  return out.str();
}

RunConfig parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const RunConfig defaults;
  nlohmann::json j = defaults.to_json();
  for (const auto& [section, keys] : tree) {
    if (!j.contains(section)) throw UsageError("config: unknown section [" + section + "]");
    if (keys.empty() && !keys.data().empty()) {
      throw UsageError("config: key '" + section + "' must belong to a section");
    }
    for (const auto& [key, node] : keys) {
      const std::string where = "[" + section + "] " + key;
      if (!j[section].contains(key)) throw UsageError("config: unknown key " + where);
      const auto& like = j[section][key];
      const std::string value = boost::algorithm::trim_copy(node.data());
      if (like.is_array()) {
        nlohmann::json arr = nlohmann::json::array();
        std::vector<std::string> parts;
        if (!value.empty()) boost::algorithm::split(parts, value, boost::is_any_of(","));
        const nlohmann::json elem_like =
            (section == "run" && key == "alphas") ? nlohmann::json(0.0) : nlohmann::json("");
        for (auto& p : parts) arr.push_back(parse_scalar(boost::algorithm::trim_copy(p), elem_like, where));
        j[section][key] = arr;
      } else {
        j[section][key] = parse_scalar(value, like, where);
      }
    }
  }
  try {
    return RunConfig::from_json(j);
  } catch (const kacq::Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

RunConfig load_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str());
}

}  // namespace kacq::cli
