#pragma once

#include <cstdint>
#include <limits>

namespace laplab {

/// Counter-based generator: output k of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, k), so substreams handed to parallel tasks
/// give results independent of scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : key_(derive(seed, stream)) {}

  /// Independent child stream; children with distinct ids never overlap.
  Rng substream(std::uint64_t id) const { return Rng(key_, id ^ 0x5851f42d4c957f2dULL, Tag{}); }

  result_type operator()() { return mix(key_ ^ mix(counter_++ + 0x9e3779b97f4a7c15ULL)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint64_t counter() const { return counter_; }

 private:
  struct Tag {};
  Rng(std::uint64_t parent_key, std::uint64_t id, Tag) : key_(derive(parent_key, id)) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static constexpr std::uint64_t derive(std::uint64_t a, std::uint64_t b) {
    return mix(mix(a + 0x9e3779b97f4a7c15ULL) ^ (b * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

__extension__ using Uint128 = unsigned __int128;

inline std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const Uint128 m = static_cast<Uint128>((*this)()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

}  // namespace laplab
