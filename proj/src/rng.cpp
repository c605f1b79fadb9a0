#include "petseg/rng.hpp"

#include <cmath>
#include <numbers>

namespace petseg {

namespace {

// Box-Muller from counters c and c + 1; u1 in (0, 1] keeps the log finite.
double box_muller(std::uint64_t key, std::uint64_t c) {
  const double u1 = static_cast<double>((CounterRng::at(key, c) >> 11) + 1) * 0x1.0p-53;
  const double u2 = CounterRng::unit_at(key, c + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double CounterRng::normal_at(std::uint64_t key, std::uint64_t n) { return box_muller(key, 2 * n); }

std::int64_t CounterRng::uniform_int(std::int64_t n) {
  if (n <= 0) {
    ++counter_;
    return 0;
  }
  const auto span = static_cast<double>(n + 1);
  const auto v = static_cast<std::int64_t>(std::floor(uniform() * span));
  return v > n ? n : v;
}

double CounterRng::normal() {
  const double z = box_muller(key_, counter_);
  counter_ += 2;
  return z;
}

}  // namespace petseg
