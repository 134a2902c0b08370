#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key and
// produces mix(key + counter * golden) for counter = 0, 1, 2, ...; the key
// for trial t of an experiment is derived from (master seed, t), so every
// trial owns an independent stream regardless of execution order.

#include <cstdint>
#include <limits>

namespace devlab {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_stream_key(std::uint64_t master_seed,
                                          std::uint64_t stream_index) noexcept {
  return mix64(master_seed ^ mix64(stream_index + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
  constexpr CounterRng(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
      : key_(derive_stream_key(master_seed, stream_index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace devlab
