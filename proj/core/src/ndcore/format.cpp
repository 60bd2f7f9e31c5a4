#include "kacq/ndcore/format.hpp"

#include <algorithm>
#include <charconv>
#include <locale>
#include <ostream>

namespace kacq {

namespace {

class ShortestNumPut : public std::num_put<char> {
 protected:
  iter_type do_put(iter_type it, std::ios_base&, char, double v) const override {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::copy(buf, r.ptr, it);
  }
};

}  // namespace

std::ostream& shortest_doubles(std::ostream& out) {
  out.imbue(std::locale(out.getloc(), new ShortestNumPut));
  return out;
}

}  // namespace kacq
