#include "kacq/ndcore/activation.hpp"

#include <cmath>

#include "kacq/error.hpp"

namespace kacq {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Silu: return "silu";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "silu") return Activation::Silu;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) noexcept { return x * sigmoid(x); }

double silu_derivative(double x) noexcept {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Silu: return silu(x);
  }
  return x;
}

double activate_derivative(Activation a, double x, double y) noexcept {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Silu: return silu_derivative(x);
  }
  return 1.0;
}

Tensor activation(const Tensor& x, Activation kind) {
  Tensor y = x;
  for (double& v : y.data()) v = activate(kind, v);
  return y;
}

}  // namespace kacq
