#pragma once

// Serial reference versions of the kernels in kernels.hpp.

#include "petseg/kernels/kernels.hpp"

namespace petseg::kernels::reference {

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

}  // namespace petseg::kernels::reference
