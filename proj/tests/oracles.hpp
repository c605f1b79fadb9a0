#pragma once
// Slow, independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "petseg/losses.hpp"
#include "petseg/volume.hpp"

namespace oracle {

using petseg::BinaryMask;
using petseg::Grid;
using petseg::Index3;

inline Grid cube(std::int64_t n, double spacing = 1.0) {
  return Grid{{n, n, n}, {spacing, spacing, spacing}, {0.0, 0.0, 0.0}};
}

inline BinaryMask random_mask(const Grid& g, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution fg(density);
  std::vector<std::uint8_t> v(g.voxel_count());
  for (auto& x : v) x = fg(rng) ? 1 : 0;
  return BinaryMask(g, std::move(v));
}

// 6/18/26-adjacency written out as "at most k coordinates differ by one".
inline bool adjacent(int dx, int dy, int dz, int conn) {
  const int changed = (dx != 0) + (dy != 0) + (dz != 0);
  if (changed == 0) return false;
  if (conn == 6) return changed == 1;
  if (conn == 18) return changed <= 2;
  return true;
}

// Breadth-first flood fill; labels numbered by first voxel in x-fastest scan.
inline std::vector<std::int32_t> flood_fill(const BinaryMask& m, int conn, int* count = nullptr) {
  const auto d = m.dims();
  std::vector<std::int32_t> lab(m.size(), 0);
  std::int32_t next = 0;
  auto at = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    return static_cast<std::size_t>(x + d[0] * (y + d[1] * z));
  };
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) {
        const auto s = at(x, y, z);
        if (!m[s] || lab[s]) continue;
        ++next;
        std::deque<Index3> q{{x, y, z}};
        lab[s] = next;
        while (!q.empty()) {
          const Index3 p = q.front();
          q.pop_front();
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (!adjacent(dx, dy, dz, conn)) continue;
                const std::int64_t nx = p[0] + dx, ny = p[1] + dy, nz = p[2] + dz;
                if (nx < 0 || ny < 0 || nz < 0 || nx >= d[0] || ny >= d[1] || nz >= d[2]) continue;
                const auto t = at(nx, ny, nz);
                if (m[t] && !lab[t]) {
                  lab[t] = next;
                  q.push_back({nx, ny, nz});
                }
              }
        }
      }
  if (count) *count = next;
  return lab;
}

inline double dsc(const BinaryMask& g, const BinaryMask& p, double both_empty = 1.0) {
  double inter = 0, sg = 0, sp = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    inter += g[i] && p[i];
    sg += g[i];
    sp += p[i];
  }
  if (sg + sp == 0) return both_empty;
  return 2.0 * inter / (sg + sp);
}

// Volume of components of `a` that share no voxel with `b`.
inline double unmatched_volume(const BinaryMask& a, const BinaryMask& b, int conn) {
  int n = 0;
  const auto lab = flood_fill(a, conn, &n);
  std::vector<std::uint64_t> size(static_cast<std::size_t>(n) + 1, 0);
  std::vector<bool> hit(static_cast<std::size_t>(n) + 1, false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!lab[i]) continue;
    ++size[static_cast<std::size_t>(lab[i])];
    if (b[i]) hit[static_cast<std::size_t>(lab[i])] = true;
  }
  std::uint64_t voxels = 0;
  for (int c = 1; c <= n; ++c) {
    if (!hit[static_cast<std::size_t>(c)]) voxels += size[static_cast<std::size_t>(c)];
  }
  const auto s = a.spacing();
  return static_cast<double>(voxels) * (s[0] * s[1] * s[2] / 1000.0);
}

inline double fpv(const BinaryMask& g, const BinaryMask& p, int conn = 6) {
  return unmatched_volume(p, g, conn);
}
inline double fnv(const BinaryMask& g, const BinaryMask& p, int conn = 6) {
  return unmatched_volume(g, p, conn);
}

// Losses evaluated term by term with plain softmax/sigmoid, in precision T.
template <typename T = double>
T gdl(const petseg::PatchBatch& b, const petseg::LossConfig& c) {
  T acc = 0;
  for (std::size_t i = 0; i < b.patches(); ++i) {
    T n[2] = {0, 0}, w[2];
    for (int l = 0; l < 2; ++l)
      for (std::size_t j = 0; j < b.voxels(); ++j) n[l] += b.target(i, l, j);
    for (int l = 0; l < 2; ++l) w[l] = n[l] > 0 ? T(1) / (n[l] * n[l]) : T(-1);
    const T wmax = std::max(w[0], w[1]) > 0 ? std::max(w[0], w[1]) : T(0);
    for (int l = 0; l < 2; ++l)
      if (w[l] < 0) w[l] = wmax;
    T num = 0, den = 0;
    for (int l = 0; l < 2; ++l)
      for (std::size_t j = 0; j < b.voxels(); ++j) {
        const T e0 = std::exp(T(b.logit(i, 0, j))), e1 = std::exp(T(b.logit(i, 1, j)));
        const T p = (l == 0 ? e0 : e1) / (e0 + e1);
        num += w[l] * b.target(i, l, j) * p;
        den += w[l] * (b.target(i, l, j) + p);
      }
    acc += (T(c.dice_numerator_factor) * num + T(c.epsilon)) / (den + T(c.eta));
  }
  return 1 - acc / static_cast<T>(b.patches());
}

template <typename T = double>
T focal(const petseg::PatchBatch& b, const petseg::LossConfig& c) {
  T acc = 0;
  for (std::size_t i = 0; i < b.patches(); ++i)
    for (int l = 0; l < 2; ++l)
      for (std::size_t j = 0; j < b.voxels(); ++j) {
        const T s = 1 / (1 + std::exp(-T(b.logit(i, l, j))));
        acc += T(c.focal_weights[l]) * std::pow(1 - s, T(c.gamma)) * b.target(i, l, j) *
               std::log(std::max(s, T(c.log_floor)));
      }
  return -acc / static_cast<T>(b.patches());
}

// Central difference of GDL + FL in extended precision. In double the focal
// sum (~1e3) leaves rounding noise near 1e-9 in the quotient, which swamps
// gradient entries of order 1e-6.
inline std::vector<double> gdfl_central_difference(const petseg::PatchBatch& b, double h,
                                                   const petseg::LossConfig& c = {}) {
  using T = long double;
  std::vector<double> z(b.logits().begin(), b.logits().end());
  std::vector<double> out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    auto zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    const auto bp = b.with_logits(zp), bm = b.with_logits(zm);
    const T fp = gdl<T>(bp, c) + focal<T>(bp, c);
    const T fm = gdl<T>(bm, c) + focal<T>(bm, c);
    out[k] = static_cast<double>((fp - fm) / (T(zp[k]) - T(zm[k])));
  }
  return out;
}

// Random batch with moderate logits; each patch gets a random foreground.
inline petseg::PatchBatch random_batch(std::size_t patches, std::size_t voxels, std::mt19937_64& rng,
                                       double logit_scale = 2.0, double density = 0.3) {
  std::normal_distribution<double> z(0.0, logit_scale);
  std::bernoulli_distribution fg(density);
  std::vector<double> logits(patches * 2 * voxels);
  for (auto& x : logits) x = z(rng);
  std::vector<std::uint8_t> mask(patches * voxels);
  for (auto& m : mask) m = fg(rng) ? 1 : 0;
  return petseg::PatchBatch::from_foreground(patches, voxels, std::move(logits), mask);
}

}  // namespace oracle
