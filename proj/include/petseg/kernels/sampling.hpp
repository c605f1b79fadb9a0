#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "petseg/volume.hpp"

namespace petseg::kernels {

// What a sample outside the source lattice returns.
//   kClamp: the nearest border voxel.
//   kZero: zero once the point leaves the voxel footprint [-0.5, n - 0.5].
enum class OutOfBounds { kClamp, kZero };

// Continuous-index coordinates that land within this distance of an integer
// are treated as that integer, so physically coincident lattices map exactly.
inline constexpr double kLatticeSnap = 1e-9;

inline double snap_to_lattice(double c) {
  const double r = std::round(c);
  return std::fabs(c - r) < kLatticeSnap ? r : c;
}

// Nearest index with ties resolved downward (2.5 -> 2).
inline std::int64_t nearest_index(double c) {
  return static_cast<std::int64_t>(std::ceil(c - 0.5 - kLatticeSnap));
}

inline bool in_footprint(double c, std::int64_t n) {
  return c >= -0.5 - kLatticeSnap && c <= static_cast<double>(n) - 0.5 + kLatticeSnap;
}

// Per-axis interpolation stencil: value = (1 - w) * v[lo] + w * v[hi].
struct LinearTap {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  double w = 0.0;
  bool valid = true;
};

inline LinearTap linear_tap(double c, std::int64_t n, OutOfBounds oob) {
  c = snap_to_lattice(c);
  LinearTap t;
  if (oob == OutOfBounds::kZero && !in_footprint(c, n)) {
    t.valid = false;
    return t;
  }
  if (c <= 0.0) return t;
  const auto last = n - 1;
  if (c >= static_cast<double>(last)) {
    t.lo = t.hi = last;
    return t;
  }
  t.lo = static_cast<std::int64_t>(std::floor(c));
  t.hi = t.lo + 1;
  t.w = c - static_cast<double>(t.lo);
  return t;
}

struct NearestTap {
  std::int64_t index = 0;
  bool valid = true;
};

inline NearestTap nearest_tap(double c, std::int64_t n, OutOfBounds oob) {
  c = snap_to_lattice(c);
  if (oob == OutOfBounds::kZero && !in_footprint(c, n)) return {0, false};
  return {std::clamp<std::int64_t>(nearest_index(c), 0, n - 1), true};
}

// Source continuous index along `axis` for destination index k.
inline double source_coordinate(const Grid& src, const Grid& dst, int axis, std::int64_t k) {
  return (dst.origin[axis] + static_cast<double>(k) * dst.spacing[axis] - src.origin[axis]) /
         src.spacing[axis];
}

// Trilinear sample at continuous index (x, y, z).
inline double sample_linear(const Grid& g, std::span<const double> v, double x, double y,
                            double z, OutOfBounds oob) {
  const LinearTap tx = linear_tap(x, g.dims[0], oob);
  const LinearTap ty = linear_tap(y, g.dims[1], oob);
  const LinearTap tz = linear_tap(z, g.dims[2], oob);
  if (!tx.valid || !ty.valid || !tz.valid) return 0.0;
  auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return v[g.index(i, j, k)]; };
  const double c00 = (1 - tx.w) * at(tx.lo, ty.lo, tz.lo) + tx.w * at(tx.hi, ty.lo, tz.lo);
  const double c10 = (1 - tx.w) * at(tx.lo, ty.hi, tz.lo) + tx.w * at(tx.hi, ty.hi, tz.lo);
  const double c01 = (1 - tx.w) * at(tx.lo, ty.lo, tz.hi) + tx.w * at(tx.hi, ty.lo, tz.hi);
  const double c11 = (1 - tx.w) * at(tx.lo, ty.hi, tz.hi) + tx.w * at(tx.hi, ty.hi, tz.hi);
  const double c0 = (1 - ty.w) * c00 + ty.w * c10;
  const double c1 = (1 - ty.w) * c01 + ty.w * c11;
  return (1 - tz.w) * c0 + tz.w * c1;
}

template <typename T>
T sample_nearest(const Grid& g, std::span<const T> v, double x, double y, double z,
                 OutOfBounds oob) {
  const NearestTap tx = nearest_tap(x, g.dims[0], oob);
  const NearestTap ty = nearest_tap(y, g.dims[1], oob);
  const NearestTap tz = nearest_tap(z, g.dims[2], oob);
  if (!tx.valid || !ty.valid || !tz.valid) return T{};
  return v[g.index(tx.index, ty.index, tz.index)];
}

}  // namespace petseg::kernels
