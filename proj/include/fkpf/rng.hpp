#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace fkpf {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Identifies a reproducible random sequence. Streams form a tree:
/// derive() yields a child stream whose draws are independent of the
/// parent and of its siblings, so work can be split across threads
/// without sharing generator state.
class RngStream {
 public:
  constexpr explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  constexpr RngStream derive(std::uint64_t tag) const {
    return RngStream(seed_, detail::mix64(stream_ ^ detail::mix64(tag + detail::kGolden)));
  }

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr std::uint64_t stream() const { return stream_; }

  friend constexpr bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Counter-based generator over a single RngStream. Satisfies
/// UniformRandomBitGenerator so the <random> distributions apply.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngStream stream)
      : key_(detail::mix64(stream.seed() ^ detail::mix64(stream.stream() + detail::kGolden))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() { return normal_(*this); }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fkpf
