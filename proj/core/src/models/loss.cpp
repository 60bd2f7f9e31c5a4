#include "kacq/models/loss.hpp"

#include <algorithm>
#include <cmath>

#include "kacq/error.hpp"

namespace kacq::models {

namespace {

void check(const Tensor& probs, std::span<const int> labels, const char* what) {
  if (probs.rank() != 2 || probs.dim(1) != 2 || probs.dim(0) != labels.size()) {
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(labels.size()) +
                     " x 2] probabilities, got " + shape_string(probs.shape()));
  }
  if (labels.empty()) throw ParameterError(std::string(what) + ": empty batch");
}

}  // namespace

LossValue bce_loss(const Tensor& probs, std::span<const int> labels) {
  check(probs, labels, "bce_loss");
  const std::size_t n = labels.size();
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  LossValue out{0.0, Tensor(probs.shape())};
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double target = (labels[b] == static_cast<int>(c)) ? 1.0 : 0.0;
      const double raw = probs.at(b, c);
      const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
      out.value -= scale * (target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
      const bool clamped = raw < kProbClamp || raw > 1.0 - kProbClamp;
      out.grad.at(b, c) = clamped ? 0.0 : -scale * (target / p - (1.0 - target) / (1.0 - p));
    }
  }
  return out;
}

LossValue square_loss(const Tensor& probs, std::span<const int> labels) {
  check(probs, labels, "square_loss");
  const double inv = 1.0 / static_cast<double>(labels.size());
  LossValue out{0.0, Tensor(probs.shape())};
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double r = probs.at(b, 1) - static_cast<double>(labels[b]);
    out.value += inv * r * r;
    out.grad.at(b, 1) = 2.0 * inv * r;
  }
  return out;
}

}  // namespace kacq::models
