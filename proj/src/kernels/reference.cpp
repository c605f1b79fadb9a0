#include "petseg/kernels/reference.hpp"

namespace petseg::kernels::reference {

std::vector<double> resample_linear(const Grid& src, std::span<const double> values,
                                    const Grid& dst, OutOfBounds oob) {
  std::vector<double> out(dst.voxel_count(), 0.0);
  for (std::int64_t z = 0; z < dst.dims[2]; ++z) {
    const double cz = source_coordinate(src, dst, 2, z);
    for (std::int64_t y = 0; y < dst.dims[1]; ++y) {
      const double cy = source_coordinate(src, dst, 1, y);
      for (std::int64_t x = 0; x < dst.dims[0]; ++x) {
        const double cx = source_coordinate(src, dst, 0, x);
        out[dst.index(x, y, z)] = sample_linear(src, values, cx, cy, cz, oob);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> resample_nearest(const Grid& src, std::span<const T> values, const Grid& dst,
                                OutOfBounds oob) {
  std::vector<T> out(dst.voxel_count(), T{});
  for (std::int64_t z = 0; z < dst.dims[2]; ++z) {
    for (std::int64_t y = 0; y < dst.dims[1]; ++y) {
      for (std::int64_t x = 0; x < dst.dims[0]; ++x) {
        out[dst.index(x, y, z)] = sample_nearest<T>(
            src, values, source_coordinate(src, dst, 0, x), source_coordinate(src, dst, 1, y),
            source_coordinate(src, dst, 2, z), oob);
      }
    }
  }
  return out;
}

template std::vector<std::uint8_t> resample_nearest(const Grid&, std::span<const std::uint8_t>,
                                                    const Grid&, OutOfBounds);
template std::vector<std::int32_t> resample_nearest(const Grid&, std::span<const std::int32_t>,
                                                    const Grid&, OutOfBounds);
template std::vector<double> resample_nearest(const Grid&, std::span<const double>, const Grid&,
                                              OutOfBounds);

OverlapCounts overlap_counts(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  OverlapCounts c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.a += a[i] != 0;
    c.b += b[i] != 0;
    c.both += (a[i] != 0) && (b[i] != 0);
  }
  return c;
}

ComponentTally tally_components(std::span<const std::int32_t> labels, std::int32_t n_components,
                                std::span<const std::uint8_t> other) {
  const auto slots = static_cast<std::size_t>(n_components) + 1;
  ComponentTally out{std::vector<std::uint64_t>(slots, 0), std::vector<std::uint8_t>(slots, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    if (l == 0) continue;
    ++out.sizes[l];
    if (other[i] != 0) out.hit[l] = 1;
  }
  return out;
}

std::vector<double> voxel_mean(std::span<const std::span<const double>> inputs) {
  if (inputs.empty()) return {};
  std::vector<double> out(inputs.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (const auto& in : inputs) s += in[i];
    out[i] = s / static_cast<double>(inputs.size());
  }
  return out;
}

void accumulate_window(const Grid& padded, const WindowSlot& slot, std::span<const double> values,
                       std::span<const double> weights, std::span<double> acc,
                       std::span<double> weight_sum) {
  std::size_t s = 0;
  for (std::int64_t z = 0; z < slot.size[2]; ++z) {
    for (std::int64_t y = 0; y < slot.size[1]; ++y) {
      for (std::int64_t x = 0; x < slot.size[0]; ++x, ++s) {
        const std::size_t d =
            padded.index(slot.origin[0] + x, slot.origin[1] + y, slot.origin[2] + z);
        const double w = weights.empty() ? 1.0 : weights[s];
        acc[d] += w * values[s];
        if (!weight_sum.empty()) weight_sum[d] += w;
      }
    }
  }
}

}  // namespace petseg::kernels::reference
