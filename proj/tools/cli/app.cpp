#include "app.hpp"

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "kacq/error.hpp"

namespace kacq::cli {

namespace {

struct Flags {
  std::string data, config, model, out, checkpoint, ansatz, encoding, metric, optimizer;
  std::uint64_t seed = 0;
  std::size_t qubits = 0, layers = 0, threads = 0, epochs = 0, folds = 0, index = 0;
  std::size_t permutations = 0, lime_samples = 0, vqc_steps = 0;
  std::vector<double> alphas;
  std::vector<std::string> variants, inputs;
  bool smote = false, no_augment = false, print_config = false;
};

void add_common(CLI::App& sub, Flags& f, std::map<std::string, CLI::Option*>& opts) {
  opts["data"] = sub.add_option("--data", f.data, "Merged heart-disease CSV");
  opts["config"] = sub.add_option("--config", f.config, "INI config file; flags override it")
                       ->check(CLI::ExistingFile);
  opts["seed"] = sub.add_option("--seed", f.seed, "Root random seed");
  opts["model"] = sub.add_option("--model", f.model,
                                 "bilstm_kannet | qdense_kannet | qc_kannet | kacq_dcnn | kacq_mlp | vqc | logistic");
  opts["qubits"] = sub.add_option("--qubits", f.qubits, "Qubits per quantum block")->check(CLI::PositiveNumber);
  opts["layers"] = sub.add_option("--layers", f.layers, "Quantum layers L")->check(CLI::PositiveNumber);
  opts["alpha"] = sub.add_option("--alpha", f.alphas, "Miscoverage level(s), comma separated")->delimiter(',');
  opts["out"] = sub.add_option("--out", f.out, "Output directory");
  opts["threads"] = sub.add_option("--threads", f.threads, "Worker threads for independent runs")
                        ->check(CLI::PositiveNumber);
  opts["epochs"] = sub.add_option("--epochs", f.epochs, "Maximum training epochs");
  opts["checkpoint"] = sub.add_option("--checkpoint", f.checkpoint, "Checkpoint directory");
  opts["ansatz"] = sub.add_option("--ansatz", f.ansatz, "VQC ansatz: sel | mera | mps | ttn");
  opts["encoding"] = sub.add_option("--encoding", f.encoding, "ordinal | one_hot");
  opts["smote"] = sub.add_flag("--smote", f.smote, "Balance the training partition with SMOTE");
  opts["no-augment"] = sub.add_flag("--no-augment", f.no_augment, "Skip the baseline probability column");
  opts["print-config"] = sub.add_flag("--print-config", f.print_config, "Print the effective config and exit");
}

RunConfig effective_config(const std::string& command, const Flags& f,
                           const std::map<std::string, CLI::Option*>& opts) {
  auto given = [&](const std::string& name) {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  };
  RunConfig c = given("config") ? load_ini(f.config) : RunConfig{};
  c.command = command;
  if (given("data")) c.data = f.data;
  if (given("seed")) c.seed = f.seed;
  if (given("model")) {
    try {
      c.model.kind = models::model_kind_from_string(f.model);
    } catch (const kacq::Error& e) {
      throw UsageError(e.what());
    }
  }
  if (given("qubits")) c.model.hp.n_qubits = f.qubits;
  if (given("layers")) c.model.hp.quantum_layers = f.layers;
  if (given("alpha")) c.alphas = f.alphas;
  if (given("out")) c.out = f.out;
  if (given("threads")) c.threads = f.threads;
  if (given("epochs")) c.train.max_epochs = f.epochs;
  if (given("checkpoint")) c.checkpoint = f.checkpoint;
  if (given("ansatz")) {
    try {
      c.model.ansatz.kind = qsim::ansatz_from_string(f.ansatz);
    } catch (const kacq::Error& e) {
      throw UsageError(e.what());
    }
  }
  if (given("encoding")) {
    if (f.encoding != "ordinal" && f.encoding != "one_hot") throw UsageError("--encoding must be ordinal or one_hot");
    c.pipeline.encoding = f.encoding == "ordinal" ? dataset::EncodingMode::Ordinal : dataset::EncodingMode::OneHot;
  }
  if (given("smote")) c.pipeline.smote = true;
  if (given("no-augment")) c.pipeline.augment_baseline = false;
  if (given("folds")) c.folds = f.folds;
  if (given("index")) c.explain_index = f.index;
  if (given("permutations")) c.shapley_permutations = f.permutations;
  if (given("lime-samples")) c.lime_samples = f.lime_samples;
  if (given("variants")) c.variants = f.variants;
  if (given("inputs")) c.inputs = f.inputs;
  if (given("metric")) c.metric = f.metric;
  if (given("vqc-steps")) c.vqc.steps = f.vqc_steps;
  if (given("optimizer")) {
    if (f.optimizer != "adam" && f.optimizer != "nesterov") throw UsageError("--optimizer must be adam or nesterov");
    c.vqc.optimizer = f.optimizer == "adam" ? train::VqcOptimizer::Adam : train::VqcOptimizer::Nesterov;
  }
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw UsageError("--alpha values must lie in (0, 1)");
  }
  if (c.folds < 2) throw UsageError("folds must be at least 2");
  c.finalize();
  try {
    c.model.hp.validate();
    c.train.validate();
  } catch (const kacq::Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"KACQ-DCNN heart-disease experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, CLI::Option*> opts;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  const std::vector<Command> commands = {
      {"preprocess", "CSV -> train/test matrices and dataset manifest", cmd_preprocess},
      {"train", "Fit a model; write checkpoint, history and test metrics", cmd_train},
      {"evaluate", "Score a checkpoint on the test split", cmd_evaluate},
      {"crossval", "Stratified k-fold cross-validation", cmd_crossval},
      {"ablate", "Train every ablation variant", cmd_ablate},
      {"benchmark-vqc", "MERA/MPS/TTN x L=1..4 variational classifiers", cmd_benchmark_vqc},
      {"conformal", "Standard and Mondrian conformal prediction", cmd_conformal},
      {"explain", "Shapley values and LIME for one test instance", cmd_explain},
      {"ttest", "Paired t-tests with Bonferroni correction", cmd_ttest},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(*sub, flags, opts);
    subs.emplace_back(sub, &c);
  }
  // Command-specific options share the flag store; only the parsed subcommand counts.
  std::map<std::string, std::map<std::string, CLI::Option*>> extra;
  auto sub_of = [&](const char* name) { return app.get_subcommand(name); };
  extra["crossval"]["folds"] = sub_of("crossval")->add_option("--folds", flags.folds, "Number of folds");
  extra["explain"]["index"] = sub_of("explain")->add_option("--index", flags.index, "Test-row index to explain");
  extra["explain"]["permutations"] =
      sub_of("explain")->add_option("--permutations", flags.permutations, "Sampled-Shapley permutations");
  extra["explain"]["lime-samples"] =
      sub_of("explain")->add_option("--lime-samples", flags.lime_samples, "LIME perturbation samples");
  extra["ablate"]["variants"] =
      sub_of("ablate")->add_option("--variants", flags.variants, "Subset of ablation rows")->delimiter(',');
  extra["ttest"]["inputs"] =
      sub_of("ttest")->add_option("--inputs", flags.inputs, "crossval.json files or a per-fold CSV")->delimiter(',');
  extra["ttest"]["metric"] = sub_of("ttest")->add_option("--metric", flags.metric, "Metric compared across folds");
  extra["benchmark-vqc"]["vqc-steps"] =
      sub_of("benchmark-vqc")->add_option("--vqc-steps", flags.vqc_steps, "Optimizer steps per classifier");
  extra["benchmark-vqc"]["optimizer"] =
      sub_of("benchmark-vqc")->add_option("--optimizer", flags.optimizer, "adam | nesterov");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    // Options are registered per subcommand; look them up on the parsed one only.
    std::map<std::string, CLI::Option*> local;
    for (const auto& [name, _] : opts) {
      const std::string flag = "--" + name;
      if (auto* o = sub->get_option_no_throw(flag)) local[name] = o;
    }
    for (const auto& [name, o] : extra[cmd->name]) local[name] = o;
    try {
      const RunConfig config = effective_config(cmd->name, flags, local);
      if (flags.print_config) {
        std::cout << to_ini(config);
        return 0;
      }
      return cmd->fn(config);
    } catch (const UsageError& e) {
      std::cerr << "kacq " << cmd->name << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "kacq " << cmd->name << " failed: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}

}  // namespace kacq::cli
