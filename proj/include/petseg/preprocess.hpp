#pragma once

#include "petseg/kernels/sampling.hpp"
#include "petseg/volume.hpp"

namespace petseg {

inline constexpr double kHalfLifeF18Min = 109.77;
inline constexpr double kHalfLifeGa68Min = 67.71;

// Inputs of body-weight SUV with the dose decayed from injection to scan start.
struct SuvParams {
  double injected_dose_bq = 0.0;
  double decay_interval_min = 0.0;
  double half_life_min = kHalfLifeF18Min;
  double patient_weight_kg = 0.0;

  void validate() const;
  double decayed_dose_bq() const;
  // Multiplier taking Bq/ml to SUV: 1000 * weight_kg / decayed dose.
  double suv_factor() const;
};

// PET_BQML -> PET_SUV.
ScalarVolume bq_to_suv(const ScalarVolume& pet, const SuvParams& params);

inline constexpr double kCtClipLowHu = -1024.0;
inline constexpr double kCtClipHighHu = 1024.0;

// CT_HU -> CT_NORM: clamp to [-1024, 1024] HU then map linearly onto [0, 1].
ScalarVolume clip_normalize_ct(const ScalarVolume& ct);

// Inclusive voxel box.
struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  Index3 extent() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }
  friend bool operator==(const Box&, const Box&) = default;
};

Box full_box(const Grid& grid);

// Foreground heuristic for "inside the body".
struct BodyThresholds {
  double ct_hu = -800.0;
  double suv = 0.1;
};

// Tightest box holding every voxel with CT > ct_hu or PET > suv; the full
// volume when nothing qualifies.
Box body_bounding_box(const ScalarVolume& ct, const ScalarVolume& pet, BodyThresholds thr = {});

// Sub-volume inside `box`; the origin moves by lo * spacing.
ScalarVolume crop_to_box(const ScalarVolume& vol, const Box& box);
BinaryMask crop_to_box(const BinaryMask& mask, const Box& box);

enum class Interpolation { kTrilinear, kNearest };

struct ResampleSpec {
  Vec3 target_spacing{2.0, 2.0, 2.0};
  Interpolation interpolation = Interpolation::kTrilinear;

  void validate() const;
};

// Output lattice of resampling `src` to `target_spacing`: same origin, dims
// ceil(n * spacing / target) per axis.
Grid resampled_grid(const Grid& src, const Vec3& target_spacing);

// Output sample k reads the source at continuous index k * target / source,
// clamped to the border voxel. Nearest ties resolve downward.
ScalarVolume resample(const ScalarVolume& vol, const ResampleSpec& spec);
// Masks always use nearest neighbour.
BinaryMask resample(const BinaryMask& mask, const Vec3& target_spacing);
// Label maps use nearest neighbour; labels may disappear, so the result is a
// plain field rather than a LabelMap.
Field<std::int32_t> resample(const LabelMap& labels, const Vec3& target_spacing);

// Resampling onto an arbitrary lattice through physical coordinates.
ScalarVolume resample_to_grid(const ScalarVolume& vol, const Grid& target, Interpolation interp,
                              kernels::OutOfBounds oob = kernels::OutOfBounds::kClamp);
BinaryMask resample_to_grid(const BinaryMask& mask, const Grid& target,
                            kernels::OutOfBounds oob = kernels::OutOfBounds::kZero);

}  // namespace petseg
