#pragma once

// Voxel-parallel kernels. Every function here has a serial twin with the same
// signature in petseg::kernels::reference (reference.hpp); the two must agree
// bit for bit, which the kernel tests check.

#include <cstdint>
#include <span>
#include <vector>

#include "petseg/kernels/sampling.hpp"
#include "petseg/volume.hpp"

namespace petseg::kernels {

struct OverlapCounts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t both = 0;
  friend bool operator==(const OverlapCounts&, const OverlapCounts&) = default;
};

// Per-label tallies, indexed by label (slot 0 is background and unused).
struct ComponentTally {
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint8_t> hit;  // 1 iff the component touches `other`
  friend bool operator==(const ComponentTally&, const ComponentTally&) = default;
};

// Window placement inside a padded accumulation grid.
struct WindowSlot {
  Index3 origin{0, 0, 0};
  Index3 size{1, 1, 1};
};

std::vector<double> resample_linear(const Grid& src, std::span<const double> values,
                                    const Grid& dst, OutOfBounds oob);

template <typename T>
std::vector<T> resample_nearest(const Grid& src, std::span<const T> values, const Grid& dst,
                                OutOfBounds oob);

OverlapCounts overlap_counts(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

ComponentTally tally_components(std::span<const std::int32_t> labels, std::int32_t n_components,
                                std::span<const std::uint8_t> other);

// Voxelwise arithmetic mean, summing inputs in list order.
std::vector<double> voxel_mean(std::span<const std::span<const double>> inputs);

// acc += weights * values over the window's footprint in `padded`. `weights`
// empty means uniform weight 1; `weight_sum` may be empty.
void accumulate_window(const Grid& padded, const WindowSlot& slot, std::span<const double> values,
                       std::span<const double> weights, std::span<double> acc,
                       std::span<double> weight_sum);

}  // namespace petseg::kernels
