#pragma once
// Scratch directories and a synthetic whole-body PET/CT phantom.

#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "petseg/preprocess.hpp"
#include "petseg/volume.hpp"

namespace support {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("petseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct Sphere {
  petseg::Vec3 centre;  // mm
  double radius;        // mm
  double suv;
};

struct Phantom {
  petseg::ScalarVolume pet_bqml;
  petseg::ScalarVolume ct_hu;
  petseg::BinaryMask mask;
  petseg::SuvParams suv;
};

// Ellipsoidal body (soft tissue, SUV 1) in air on a 4 mm lattice, with
// spherical lesions. Lesions are disjoint and well inside the body.
inline std::vector<Sphere> default_lesions() {
  return {{{60.0, 60.0, 100.0}, 12.0, 8.0},
          {{100.0, 70.0, 140.0}, 8.0, 6.0},
          {{80.0, 100.0, 60.0}, 10.0, 10.0}};
}

inline Phantom make_phantom(const std::vector<Sphere>& lesions, petseg::Index3 dims = {40, 44, 52},
                            double spacing = 4.0) {
  petseg::Grid g{dims, {spacing, spacing, spacing}, {-8.0, -12.0, 4.0}};
  petseg::SuvParams suv{3.7e8, 30.0, petseg::kHalfLifeF18Min, 70.0};
  const double bq_per_suv = 1.0 / suv.suv_factor();
  std::vector<double> pet(g.voxel_count()), ct(g.voxel_count());
  std::vector<std::uint8_t> mask(g.voxel_count());
  const petseg::Vec3 body_c{80.0, 80.0, 100.0};
  const petseg::Vec3 body_r{60.0, 50.0, 80.0};
  for (std::int64_t z = 0; z < dims[2]; ++z)
    for (std::int64_t y = 0; y < dims[1]; ++y)
      for (std::int64_t x = 0; x < dims[0]; ++x) {
        const petseg::Vec3 p{g.origin[0] + static_cast<double>(x) * spacing,
                             g.origin[1] + static_cast<double>(y) * spacing,
                             g.origin[2] + static_cast<double>(z) * spacing};
        const std::size_t i = g.index(x, y, z);
        double e = 0.0;
        for (int a = 0; a < 3; ++a) e += std::pow((p[a] - body_c[a]) / body_r[a], 2);
        const bool body = e <= 1.0;
        ct[i] = body ? 40.0 : -1000.0;
        double s = body ? 1.0 : 0.0;
        for (const auto& l : lesions) {
          double r2 = 0.0;
          for (int a = 0; a < 3; ++a) r2 += (p[a] - l.centre[a]) * (p[a] - l.centre[a]);
          if (r2 <= l.radius * l.radius) {
            s = l.suv;
            mask[i] = 1;
          }
        }
        pet[i] = s * bq_per_suv;
      }
  return {petseg::ScalarVolume(g, std::move(pet), petseg::VolumeKind::kPetBqml),
          petseg::ScalarVolume(g, std::move(ct), petseg::VolumeKind::kCtHu),
          petseg::BinaryMask(g, std::move(mask)), suv};
}

}  // namespace support

namespace support {

// Worked examples on a 4^3 lattice at 2 mm.
struct MaskPair {
  petseg::BinaryMask gt;
  petseg::BinaryMask pred;
};

inline MaskPair mask_pair(const std::vector<petseg::Index3>& gt, const std::vector<petseg::Index3>& pred) {
  const petseg::Grid g{{4, 4, 4}, {2.0, 2.0, 2.0}, {0.0, 0.0, 0.0}};
  std::vector<std::uint8_t> a(g.voxel_count(), 0), b(g.voxel_count(), 0);
  for (const auto& p : gt) a[g.index(p)] = 1;
  for (const auto& p : pred) b[g.index(p)] = 1;
  return {petseg::BinaryMask(g, a), petseg::BinaryMask(g, b)};
}

// |G| = 3, |P| = 5, |G n P| = 2.
inline MaskPair dsc_example() {
  return mask_pair({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}},
                   {{1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {3, 1, 0}, {3, 2, 0}});
}

// Prediction: A (3 voxels, overlaps gt) and B (5 voxels, disjoint).
inline MaskPair fpv_example() {
  return mask_pair({{0, 0, 0}, {1, 0, 0}},
                   {{0, 0, 0}, {1, 0, 0}, {2, 0, 0},
                    {0, 0, 3}, {1, 0, 3}, {2, 0, 3}, {3, 0, 3}, {3, 1, 3}});
}

// Ground truth: 4-voxel component (hit) and 2-voxel component (missed).
inline MaskPair fnv_example() {
  return mask_pair({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {0, 3, 3}, {1, 3, 3}},
                   {{2, 0, 0}});
}

}  // namespace support
