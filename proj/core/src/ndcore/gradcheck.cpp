#include "kacq/ndcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "kacq/error.hpp"

namespace kacq {

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double eps) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_gradient: non-finite function value at index " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  if (analytic.size() != numeric.size()) throw ShapeError("relative_error: size mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
  }
  const double denom = l2_norm(analytic.data()) + l2_norm(numeric.data());
  return std::sqrt(diff) / std::max(denom, floor);
}

}  // namespace kacq
