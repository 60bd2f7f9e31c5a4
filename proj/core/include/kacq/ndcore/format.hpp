#pragma once

#include <iosfwd>

namespace kacq {

/// Imbues `out` so doubles print in their shortest round-trip form (e.g. 0.05, -0.8).
std::ostream& shortest_doubles(std::ostream& out);

}  // namespace kacq
