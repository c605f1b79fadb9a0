#include "petseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace petseg {

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) {
      throw DomainError("grid dimension " + std::to_string(a) + " is " +
                        std::to_string(dims[a]) + ", must be >= 1");
    }
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw DomainError("grid spacing " + std::to_string(a) + " is " +
                        std::to_string(spacing[a]) + ", must be finite and > 0");
    }
  }
}

void require_same_lattice(const Grid& a, const Grid& b, std::string_view what) {
  if (a.dims != b.dims) {
    throw ShapeError(std::string(what) + ": dims differ (" + std::to_string(a.dims[0]) + "x" +
                     std::to_string(a.dims[1]) + "x" + std::to_string(a.dims[2]) + " vs " +
                     std::to_string(b.dims[0]) + "x" + std::to_string(b.dims[1]) + "x" +
                     std::to_string(b.dims[2]) + ")");
  }
  if (a.spacing != b.spacing) {
    throw ShapeError(std::string(what) + ": spacing differs");
  }
}

std::string_view to_string(VolumeKind kind) {
  switch (kind) {
    case VolumeKind::kGeneric: return "GENERIC";
    case VolumeKind::kPetBqml: return "PET_BQML";
    case VolumeKind::kPetSuv: return "PET_SUV";
    case VolumeKind::kCtHu: return "CT_HU";
    case VolumeKind::kCtNorm: return "CT_NORM";
    case VolumeKind::kProb: return "PROB";
  }
  return "UNKNOWN";
}

ScalarVolume::ScalarVolume(Grid grid, std::vector<double> data, VolumeKind kind)
    : Field<double>(grid, std::move(data)), kind_(kind) {
  if (kind_ == VolumeKind::kProb || kind_ == VolumeKind::kCtNorm) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!(data_[i] >= 0.0 && data_[i] <= 1.0)) {
        throw DataError(std::string(to_string(kind_)) + " voxel " + std::to_string(i) +
                        " has value " + std::to_string(data_[i]) + " outside [0, 1]");
      }
    }
  }
}

BinaryMask::BinaryMask(Grid grid, std::vector<std::uint8_t> data)
    : Field<std::uint8_t>(grid, std::move(data)) {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] > 1) {
      throw DataError("mask voxel " + std::to_string(i) + " has value " +
                      std::to_string(data_[i]) + ", expected 0 or 1");
    }
  }
}

std::size_t BinaryMask::foreground_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

LabelMap::LabelMap(Grid grid, std::vector<std::int32_t> data, std::int32_t n_components)
    : Field<std::int32_t>(grid, std::move(data)), n_components_(n_components) {
  if (n_components_ < 0) throw DomainError("negative component count");
  std::vector<bool> seen(static_cast<std::size_t>(n_components_) + 1, false);
  for (std::int32_t v : data_) {
    if (v < 0 || v > n_components_) {
      throw DataError("label " + std::to_string(v) + " outside 0.." +
                      std::to_string(n_components_));
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  for (std::int32_t l = 1; l <= n_components_; ++l) {
    if (!seen[static_cast<std::size_t>(l)]) {
      throw DataError("labels are not contiguous: " + std::to_string(l) + " is missing");
    }
  }
}

double voxel_volume_ml(const Vec3& spacing) {
  for (double s : spacing) {
    if (!(s > 0.0)) throw DomainError("voxel spacing must be > 0, got " + std::to_string(s));
  }
  return spacing[0] * spacing[1] * spacing[2] / 1000.0;
}

}  // namespace petseg
