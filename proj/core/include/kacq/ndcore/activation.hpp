#pragma once

#include <string>
#include <string_view>

#include "kacq/ndcore/tensor.hpp"

namespace kacq {

enum class Activation { Identity, Relu, Sigmoid, Tanh, Silu };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view name);

double sigmoid(double x) noexcept;
/// x * sigmoid(x)
double silu(double x) noexcept;
double silu_derivative(double x) noexcept;

double activate(Activation a, double x) noexcept;
/// Derivative expressed through the pre-activation input `x` and output `y`.
double activate_derivative(Activation a, double x, double y) noexcept;

Tensor activation(const Tensor& x, Activation kind);

}  // namespace kacq
