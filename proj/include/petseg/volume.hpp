#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "petseg/error.hpp"

namespace petseg {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

// Voxel lattice: extent, spacing in mm, origin in mm. Linear voxel order is
// x fastest, then y, then z (the NIfTI on-disk order).
struct Grid {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  // Throws DomainError unless every dim >= 1 and every spacing > 0.
  void validate() const;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z));
  }
  std::size_t index(const Index3& p) const { return index(p[0], p[1], p[2]); }
  Index3 coords(std::size_t linear) const {
    const auto l = static_cast<std::int64_t>(linear);
    return {l % dims[0], (l / dims[0]) % dims[1], l / (dims[0] * dims[1])};
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  // Same dims and spacing; origin is not compared.
  bool same_lattice(const Grid& other) const {
    return dims == other.dims && spacing == other.spacing;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Throws ShapeError naming `what` when the two grids differ in dims or spacing.
void require_same_lattice(const Grid& a, const Grid& b, std::string_view what);

// Dense voxel field over a Grid. Values are fixed after construction.
template <typename T>
class Field {
 public:
  using value_type = T;

  Field() : data_(1, T{}) {}
  Field(Grid grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
    grid_.validate();
    if (data_.size() != grid_.voxel_count()) {
      throw ShapeError("voxel buffer length " + std::to_string(data_.size()) +
                       " does not match grid voxel count " +
                       std::to_string(grid_.voxel_count()));
    }
  }
  Field(Grid grid, T fill) : Field(grid, std::vector<T>(grid.voxel_count(), fill)) {}

  const Grid& grid() const { return grid_; }
  const Index3& dims() const { return grid_.dims; }
  const Vec3& spacing() const { return grid_.spacing; }
  std::size_t size() const { return data_.size(); }
  std::span<const T> data() const { return data_; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[grid_.index(x, y, z)];
  }

  friend bool operator==(const Field& a, const Field& b) {
    return a.grid_ == b.grid_ && a.data_ == b.data_;
  }

 protected:
  Grid grid_;
  std::vector<T> data_;
};

enum class VolumeKind { kGeneric, kPetBqml, kPetSuv, kCtHu, kCtNorm, kProb };

std::string_view to_string(VolumeKind kind);

// 3D scalar image. kProb and kCtNorm volumes are range-checked to [0, 1].
class ScalarVolume : public Field<double> {
 public:
  ScalarVolume() = default;
  ScalarVolume(Grid grid, std::vector<double> data, VolumeKind kind = VolumeKind::kGeneric);
  ScalarVolume(Grid grid, double fill, VolumeKind kind = VolumeKind::kGeneric)
      : ScalarVolume(grid, std::vector<double>(grid.voxel_count(), fill), kind) {}

  VolumeKind kind() const { return kind_; }
  // Same voxels under a different semantic tag (re-validated).
  ScalarVolume retagged(VolumeKind kind) const { return ScalarVolume(grid_, data_, kind); }

  friend bool operator==(const ScalarVolume& a, const ScalarVolume& b) {
    return a.kind_ == b.kind_ && static_cast<const Field<double>&>(a) == b;
  }

 private:
  VolumeKind kind_ = VolumeKind::kGeneric;
};

// Foreground/background mask; every voxel is exactly 0 or 1.
class BinaryMask : public Field<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(Grid grid, std::vector<std::uint8_t> data);
  BinaryMask(Grid grid, std::uint8_t fill)
      : BinaryMask(grid, std::vector<std::uint8_t>(grid.voxel_count(), fill)) {}

  std::size_t foreground_count() const;
};

// Component labels: 0 is background, positive labels are exactly 1..n_components.
class LabelMap : public Field<std::int32_t> {
 public:
  LabelMap() = default;
  LabelMap(Grid grid, std::vector<std::int32_t> data, std::int32_t n_components);

  std::int32_t n_components() const { return n_components_; }

 private:
  std::int32_t n_components_ = 0;
};

// Volume of one voxel in milliliters (mm^3 / 1000).
double voxel_volume_ml(const Vec3& spacing);

}  // namespace petseg
