#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kacq/dataset/records.hpp"

namespace kacq::testing {

struct SyntheticHeartOptions {
  std::size_t rows = 918;
  double positive_rate = 0.553;
  /// Extra exact copies of earlier rows appended (then shuffled in).
  std::size_t duplicates = 0;
  /// Probability of blanking a cell (never the label).
  double missing_rate = 0.0;
  std::uint64_t seed = 7;
};

/// Class-conditional draws shaped like the merged heart-disease data.
std::vector<dataset::RawRecord> synthetic_heart(const SyntheticHeartOptions& options = {});

/// The same rows rendered as CSV text with the canonical header.
std::string synthetic_heart_csv(const SyntheticHeartOptions& options = {});

}  // namespace kacq::testing
