#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wvr {

/// splitmix64 step; the generator behind every stochastic stream here.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Mixes (seed, index) into the seed of an independent substream. Substreams
/// for distinct indices are decorrelated, so per-path streams can be consumed
/// in any order or in parallel without changing the numbers drawn.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (index + 0x632be59bd9b4e019ull));
  splitmix64_next(s);
  return splitmix64_next(s);
}

/// Deterministic standard-normal stream (splitmix64 + Box-Muller). Unlike
/// std::normal_distribution the draw sequence is pinned by this header, not by
/// the standard library implementation.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t stream_seed) : state_(stream_seed) {}

  /// Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform() {
    return (static_cast<double>(splitmix64_next(state_) >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wvr
