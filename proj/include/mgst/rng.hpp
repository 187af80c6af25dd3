#pragma once

#include <cstdint>

#include "mgst/normal.hpp"

namespace mgst {

// Counter-based generator: the i-th output is a pure function of
// (seed, stream, i), so replicates can be sampled in any order or in
// parallel and still reproduce bit-for-bit.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

  // Uniform on (0, 1), never 0 or 1.
  double uniform() {
    std::uint64_t v = mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform()); }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed ^ 0xD1B54A32D192ED03ULL) + stream);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mgst
