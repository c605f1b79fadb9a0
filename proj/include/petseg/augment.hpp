#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "petseg/preprocess.hpp"
#include "petseg/rng.hpp"
#include "petseg/volume.hpp"

namespace petseg {

struct AugmentConfig {
  std::int64_t patch_size = 128;
  std::array<double, 2> translate_range{0.0, 10.0};  // voxels, per axis
  bool signed_translation = false;  // sample in (-hi, hi) instead of (lo, hi)
  std::array<double, 2> rotation_range{-std::numbers::pi / 12, std::numbers::pi / 12};  // about z
  double scale_factor_max = 1.1;  // isotropic scale drawn from [1/max, max]
  std::array<double, 2> elastic_sigma_range{0.0, 1.0};   // control-grid cells
  std::array<double, 2> elastic_offset_range{0.0, 1.0};  // voxels
  std::int64_t elastic_pitch = 8;                        // voxels between control points
  std::array<double, 2> gamma_range{0.7, 1.5};
  double noise_mu = 0.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stream ids for CounterRng::stream(seed, call_index, id). Each transform of
// each call draws from its own stream.
enum class AugmentStream : std::uint64_t {
  kPatch = 1,
  kAffine = 2,
  kElastic = 3,
  kGammaPet = 4,
  kGammaCt = 5,
  kNoisePet = 6,
  kNoiseCt = 7,
};

CounterRng augment_stream(const AugmentConfig& cfg, std::uint64_t call_index, AugmentStream s);

// Cubic patch placement. `offset` is in zero-padded coordinates; `pad_lo` is
// the symmetric padding applied first to axes shorter than the patch.
struct PatchPlacement {
  std::int64_t size = 128;
  Index3 pad_lo{0, 0, 0};
  Index3 offset{0, 0, 0};
};

PatchPlacement draw_patch(const Index3& dims, const AugmentConfig& cfg, CounterRng& rng);
ScalarVolume extract_patch(const ScalarVolume& vol, const PatchPlacement& p);
BinaryMask extract_patch(const BinaryMask& mask, const PatchPlacement& p);

// Draws a placement and extracts it.
ScalarVolume random_patch(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng);

struct AffineParams {
  Vec3 translation{0.0, 0.0, 0.0};  // voxels
  double rotation = 0.0;            // radians about z
  double scale = 1.0;
};

AffineParams draw_affine(const AugmentConfig& cfg, CounterRng& rng);
// Output voxel p samples the input at c + R(-theta) (p - c - t) / scale, with c
// the volume centre. Outside the input footprint the fill is 0.
ScalarVolume apply_affine(const ScalarVolume& vol, const AffineParams& params);
BinaryMask apply_affine(const BinaryMask& mask, const AffineParams& params);
ScalarVolume affine_augment(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng);

// Random offsets on a coarse control lattice (pitch voxels apart), before smoothing.
struct ElasticParams {
  double sigma = 0.0;
  std::int64_t pitch = 8;
  Index3 control_dims{1, 1, 1};
  std::array<std::vector<double>, 3> offsets;  // per displacement component
};

ElasticParams draw_elastic(const Index3& dims, const AugmentConfig& cfg, CounterRng& rng);

// Dense displacement (dx, dy, dz) per voxel: control offsets smoothed by a
// Gaussian of params.sigma control cells, then trilinearly upsampled.
std::array<std::vector<double>, 3> displacement_field(const ElasticParams& params,
                                                      const Index3& dims);

// Backward warp: output p samples the input at p + d(p), border-clamped.
ScalarVolume apply_elastic(const ScalarVolume& vol, const ElasticParams& params);
BinaryMask apply_elastic(const BinaryMask& mask, const ElasticParams& params);
ScalarVolume elastic_deform(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng);

// Min-max anchored power law; constant volumes are returned unchanged.
ScalarVolume gamma_correct(const ScalarVolume& vol, double gamma);

// Adds i.i.d. normal(mu, sigma) noise. Voxel i uses normal_at(rng.key(), i), so
// the result does not depend on thread count. The kind becomes GENERIC for
// range-limited kinds.
ScalarVolume add_gaussian_noise(const ScalarVolume& vol, const AugmentConfig& cfg,
                                const CounterRng& rng);

// Everything drawn for one augmented sample.
struct AugmentDraw {
  std::uint64_t call_index = 0;
  PatchPlacement patch;
  AffineParams affine;
  double elastic_sigma = 0.0;
  double gamma_pet = 1.0;
  double gamma_ct = 1.0;
};

struct AugmentSample {
  ScalarVolume pet;
  ScalarVolume ct;
  std::optional<BinaryMask> mask;
  AugmentDraw draw;
};

// patch -> affine -> elastic (shared geometry for every channel) -> gamma ->
// noise (per image channel).
AugmentSample augment_case(const ScalarVolume& pet, const ScalarVolume& ct,
                           const std::optional<BinaryMask>& mask, const AugmentConfig& cfg,
                           std::uint64_t call_index);

}  // namespace petseg
