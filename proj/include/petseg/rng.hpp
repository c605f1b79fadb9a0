#pragma once

#include <cstdint>

namespace petseg {

// Counter-based generator: draw n of a stream is mix(key + (n + 1) * golden),
// with mix the SplitMix64 finalizer. Draws depend only on (key, n), so a
// stream can be sampled out of order or in parallel with identical results.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Raw draw at an absolute counter position.
  static std::uint64_t at(std::uint64_t key, std::uint64_t counter) {
    return mix(key + (counter + 1) * kGolden);
  }
  // Uniform in [0, 1) with 53 random bits.
  static double unit_at(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>(at(key, counter) >> 11) * 0x1.0p-53;
  }
  // Standard normal from counters (2n, 2n + 1) by Box-Muller.
  static double normal_at(std::uint64_t key, std::uint64_t n);

  // Stream splitting rule: key = mix(mix(seed + (call + 1) * golden) ^ (stream * C)).
  static CounterRng stream(std::uint64_t seed, std::uint64_t call_index, std::uint64_t stream_id) {
    const std::uint64_t base = mix(seed + (call_index + 1) * kGolden);
    return CounterRng(mix(base ^ (stream_id * 0xD1B54A32D192ED03ull)));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t next() { return at(key_, counter_++); }
  double uniform() { return unit_at(key_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Integer in [0, n].
  std::int64_t uniform_int(std::int64_t n);
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace petseg
