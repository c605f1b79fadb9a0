#pragma once

#include <cstdint>
#include <filesystem>

#include "petseg/volume.hpp"

namespace petseg {

// NIfTI-1 datatype codes handled by the reader.
enum class NiftiType : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

// Reads a single-file NIfTI-1 image (.nii or .nii.gz; compression is detected
// from content). scl_slope/scl_inter are applied when the slope is non-zero.
// The affine rotation is ignored: only dims, pixdim spacing and the
// translation are kept.
ScalarVolume read_nifti(const std::filesystem::path& path,
                        VolumeKind kind = VolumeKind::kGeneric);

// Reads a mask; throws DataError listing the offending values if any voxel is
// not exactly 0 or 1.
BinaryMask read_nifti_mask(const std::filesystem::path& path);

// Gzip-compressed output when the path ends in ".gz". Scalar volumes are
// stored as float32 when every voxel survives the narrowing exactly and as
// float64 otherwise. Masks are stored as uint8, label maps as int32.
void write_nifti(const ScalarVolume& vol, const std::filesystem::path& path);
void write_nifti(const BinaryMask& mask, const std::filesystem::path& path);
void write_nifti(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace petseg
