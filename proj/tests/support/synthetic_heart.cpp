#include "synthetic_heart.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kacq/ndcore/rng.hpp"

namespace kacq::testing {

namespace {

std::size_t pick(RngStream& rng, std::initializer_list<double> probs) {
  double u = rng.uniform01();
  std::size_t i = 0;
  for (double p : probs) {
    if (u < p) return i;
    u -= p;
    ++i;
  }
  return i - 1;
}

double clamp_round(double v, double lo, double hi, double step = 1.0) {
  return std::round(std::clamp(v, lo, hi) / step) * step;
}

}  // namespace

std::vector<dataset::RawRecord> synthetic_heart(const SyntheticHeartOptions& o) {
  using dataset::Column;
  RngStream rng(o.seed, stream_id("synthetic-heart"));
  std::vector<dataset::RawRecord> rows;
  rows.reserve(o.rows + o.duplicates);
  for (std::size_t i = 0; i < o.rows; ++i) {
    dataset::RawRecord r;
    const int y = rng.uniform01() < o.positive_rate ? 1 : 0;
    r.heart_disease = y;
    r[Column::Age] = clamp_round(rng.normal(50.5 + 5.5 * y, 9.0), 28, 77);
    r[Column::Sex] = rng.uniform01() < 0.65 + 0.25 * y ? 0.0 : 1.0;
    // ChestPainType codes: ASY=0 ATA=1 NAP=2 TA=3.
    r[Column::ChestPainType] = static_cast<double>(
        y ? pick(rng, {0.77, 0.05, 0.14, 0.04}) : pick(rng, {0.25, 0.37, 0.32, 0.06}));
    r[Column::RestingBP] = clamp_round(rng.normal(130.0 + 4.0 * y, 18.0), 80, 200);
    const bool chol_zero = rng.uniform01() < (y ? 0.30 : 0.04);
    r[Column::Cholesterol] = chol_zero ? 0.0 : clamp_round(rng.normal(240.0 - 3.0 * y, 55.0), 85, 603);
    r[Column::FastingBS] = rng.uniform01() < 0.10 + 0.23 * y ? 1.0 : 0.0;
    r[Column::RestingECG] = static_cast<double>(pick(rng, {0.60, 0.17 + 0.06 * y, 0.23 - 0.06 * y}));
    r[Column::MaxHR] = clamp_round(rng.normal(148.0 - 21.0 * y, 23.0), 60, 202);
    r[Column::ExerciseAngina] = rng.uniform01() < 0.13 + 0.49 * y ? 1.0 : 0.0;
    r[Column::Oldpeak] = y ? clamp_round(rng.normal(1.3, 1.1), -2.6, 6.2, 0.1)
                           : clamp_round(std::fabs(rng.normal(0.2, 0.7)), 0.0, 4.2, 0.1);
    // ST_Slope codes: Down=0 Flat=1 Up=2.
    r[Column::StSlope] = static_cast<double>(
        y ? pick(rng, {0.08, 0.75, 0.17}) : pick(rng, {0.03, 0.18, 0.79}));
    if (o.missing_rate > 0.0) {
      for (auto& f : r.fields) {
        if (rng.uniform01() < o.missing_rate) f.reset();
      }
    }
    rows.push_back(r);
  }
  for (std::size_t k = 0; k < o.duplicates && !rows.empty(); ++k) {
    rows.push_back(rows[static_cast<std::size_t>(rng.below(o.rows))]);
  }
  if (o.duplicates > 0) rng.shuffle(rows);
  return rows;
}

std::string synthetic_heart_csv(const SyntheticHeartOptions& options) {
  std::ostringstream out;
  dataset::write_records(out, synthetic_heart(options));
  return out.str();
}

}  // namespace kacq::testing
