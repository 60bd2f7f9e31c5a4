#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kacq::acceptance {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

inline Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

/// Heart-disease CSV from $KACQ_HEART_CSV or <source>/data/heart.csv.
std::optional<std::filesystem::path> heart_csv();

/// Fresh scratch directory under the system temp directory.
std::filesystem::path scratch_dir(const std::string& name);

/// Runs the kacq command line in-process; returns its exit code.
int run_kacq(std::vector<std::string> args);

std::string fmt(double v, int precision = 4);

Outcome quantum_correctness();
Outcome gradient_contract();
Outcome kan_properties();
Outcome headline_model();
Outcome ablation_direction();
Outcome metric_oracles();
Outcome statistical_tests();
Outcome conformal_coverage();
Outcome conformal_heart();
Outcome shapley_lime();
Outcome vqc_baselines();
Outcome pipeline_determinism();

}  // namespace kacq::acceptance
