#include "petseg/kernels/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>

namespace petseg::kernels {
namespace {

std::vector<LinearTap> linear_taps(const Grid& src, const Grid& dst, int axis, OutOfBounds oob) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(dst.dims[axis]));
  for (std::int64_t k = 0; k < dst.dims[axis]; ++k) {
    taps[static_cast<std::size_t>(k)] =
        linear_tap(source_coordinate(src, dst, axis, k), src.dims[axis], oob);
  }
  return taps;
}

std::vector<NearestTap> nearest_taps(const Grid& src, const Grid& dst, int axis, OutOfBounds oob) {
  std::vector<NearestTap> taps(static_cast<std::size_t>(dst.dims[axis]));
  for (std::int64_t k = 0; k < dst.dims[axis]; ++k) {
    taps[static_cast<std::size_t>(k)] =
        nearest_tap(source_coordinate(src, dst, axis, k), src.dims[axis], oob);
  }
  return taps;
}

}  // namespace

std::vector<double> resample_linear(const Grid& src, std::span<const double> values,
                                    const Grid& dst, OutOfBounds oob) {
  const auto tx = linear_taps(src, dst, 0, oob);
  const auto ty = linear_taps(src, dst, 1, oob);
  const auto tz = linear_taps(src, dst, 2, oob);
  std::vector<double> out(dst.voxel_count(), 0.0);
  const std::int64_t nx = dst.dims[0], ny = dst.dims[1], nz = dst.dims[2];
  auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return values[src.index(i, j, k)]; };

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      const LinearTap& cz = tz[static_cast<std::size_t>(z)];
      const LinearTap& cy = ty[static_cast<std::size_t>(y)];
      if (!cz.valid || !cy.valid) continue;
      for (std::int64_t x = 0; x < nx; ++x) {
        const LinearTap& cx = tx[static_cast<std::size_t>(x)];
        if (!cx.valid) continue;
        const double c00 = (1 - cx.w) * at(cx.lo, cy.lo, cz.lo) + cx.w * at(cx.hi, cy.lo, cz.lo);
        const double c10 = (1 - cx.w) * at(cx.lo, cy.hi, cz.lo) + cx.w * at(cx.hi, cy.hi, cz.lo);
        const double c01 = (1 - cx.w) * at(cx.lo, cy.lo, cz.hi) + cx.w * at(cx.hi, cy.lo, cz.hi);
        const double c11 = (1 - cx.w) * at(cx.lo, cy.hi, cz.hi) + cx.w * at(cx.hi, cy.hi, cz.hi);
        const double c0 = (1 - cy.w) * c00 + cy.w * c10;
        const double c1 = (1 - cy.w) * c01 + cy.w * c11;
        out[dst.index(x, y, z)] = (1 - cz.w) * c0 + cz.w * c1;
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> resample_nearest(const Grid& src, std::span<const T> values, const Grid& dst,
                                OutOfBounds oob) {
  const auto tx = nearest_taps(src, dst, 0, oob);
  const auto ty = nearest_taps(src, dst, 1, oob);
  const auto tz = nearest_taps(src, dst, 2, oob);
  std::vector<T> out(dst.voxel_count(), T{});
  const std::int64_t nx = dst.dims[0], ny = dst.dims[1], nz = dst.dims[2];

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      const NearestTap& cz = tz[static_cast<std::size_t>(z)];
      const NearestTap& cy = ty[static_cast<std::size_t>(y)];
      if (!cz.valid || !cy.valid) continue;
      for (std::int64_t x = 0; x < nx; ++x) {
        const NearestTap& cx = tx[static_cast<std::size_t>(x)];
        if (!cx.valid) continue;
        out[dst.index(x, y, z)] = values[src.index(cx.index, cy.index, cz.index)];
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
  std::uint64_t na = 0, nb = 0, both = 0;
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for reduction(+ : na, nb, both) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint64_t va = a[static_cast<std::size_t>(i)] != 0;
    const std::uint64_t vb = b[static_cast<std::size_t>(i)] != 0;
    na += va;
    nb += vb;
    both += va & vb;
  }
  return {na, nb, both};
}

ComponentTally tally_components(std::span<const std::int32_t> labels, std::int32_t n_components,
                                std::span<const std::uint8_t> other) {
  const auto slots = static_cast<std::size_t>(n_components) + 1;
  ComponentTally out{std::vector<std::uint64_t>(slots, 0), std::vector<std::uint8_t>(slots, 0)};
  const auto n = static_cast<std::int64_t>(labels.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> sizes(slots, 0);
    std::vector<std::uint8_t> hit(slots, 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      if (l == 0) continue;
      ++sizes[l];
      hit[l] |= other[static_cast<std::size_t>(i)] != 0;
    }
#pragma omp critical(petseg_tally_merge)
    for (std::size_t l = 1; l < slots; ++l) {
      out.sizes[l] += sizes[l];
      out.hit[l] |= hit[l];
    }
  }
  return out;
}

std::vector<double> voxel_mean(std::span<const std::span<const double>> inputs) {
  if (inputs.empty()) return {};
  const std::size_t n = inputs.front().size();
  const double count = static_cast<double>(inputs.size());
  std::vector<double> out(n);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < ni; ++i) {
    double s = 0.0;
    for (const auto& in : inputs) s += in[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = s / count;
  }
  return out;
}

void accumulate_window(const Grid& padded, const WindowSlot& slot, std::span<const double> values,
                       std::span<const double> weights, std::span<double> acc,
                       std::span<double> weight_sum) {
  const std::int64_t wx = slot.size[0], wy = slot.size[1], wz = slot.size[2];
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t z = 0; z < wz; ++z) {
    for (std::int64_t y = 0; y < wy; ++y) {
      const std::size_t src_row = static_cast<std::size_t>(wx * (y + wy * z));
      const std::size_t dst_row =
          padded.index(slot.origin[0], slot.origin[1] + y, slot.origin[2] + z);
      for (std::int64_t x = 0; x < wx; ++x) {
        const std::size_t s = src_row + static_cast<std::size_t>(x);
        const std::size_t d = dst_row + static_cast<std::size_t>(x);
        const double w = weights.empty() ? 1.0 : weights[s];
        acc[d] += w * values[s];
        if (!weight_sum.empty()) weight_sum[d] += w;
      }
    }
  }
}

}  // namespace petseg::kernels
