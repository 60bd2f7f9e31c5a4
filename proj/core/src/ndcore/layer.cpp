#include "kacq/ndcore/layer.hpp"

namespace kacq {

std::vector<const Param*> Layer::params() const {
  auto mutable_params = const_cast<Layer*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

}  // namespace kacq
