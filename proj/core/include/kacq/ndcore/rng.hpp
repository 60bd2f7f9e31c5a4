#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace kacq {

/// Counter-based generator. Draw `i` of stream (seed, id) is
/// splitmix64_finalize(key + (i + 1) * 0x9E3779B97F4A7C15) where key mixes seed and id.
/// Output depends only on (seed, id, i), so sequences are identical on every platform
/// and child streams never overlap their parent's.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  /// Independent stream derived from this stream's seed and id; does not advance *this.
  RngStream child(std::uint64_t id) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// Box-Muller on two uniform01 draws: sqrt(-2 ln(1-u1)) * cos(2 pi u2).
  double normal(double mu = 0.0, double sigma = 1.0);
  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept;

/// FNV-1a hash of a name, for readable stream ids such as stream_id("shuffle").
std::uint64_t stream_id(std::string_view name) noexcept;

}  // namespace kacq
