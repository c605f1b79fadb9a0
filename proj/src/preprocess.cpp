#include "petseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "petseg/kernels/kernels.hpp"

namespace petseg {
namespace {

template <typename T>
std::vector<T> crop_values(const Field<T>& f, const Box& box) {
  const Grid& g = f.grid();
  for (int a = 0; a < 3; ++a) {
    if (box.lo[a] < 0 || box.hi[a] >= g.dims[a] || box.lo[a] > box.hi[a]) {
      throw BoundsError("crop box axis " + std::to_string(a) + " [" + std::to_string(box.lo[a]) +
                        ", " + std::to_string(box.hi[a]) + "] outside 0.." +
                        std::to_string(g.dims[a] - 1));
    }
  }
  const Index3 e = box.extent();
  std::vector<T> out(static_cast<std::size_t>(e[0] * e[1] * e[2]));
  auto src = f.data();
  std::size_t o = 0;
  for (std::int64_t z = box.lo[2]; z <= box.hi[2]; ++z) {
    for (std::int64_t y = box.lo[1]; y <= box.hi[1]; ++y) {
      const std::size_t row = g.index(box.lo[0], y, z);
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(row), e[0], out.begin() + static_cast<std::ptrdiff_t>(o));
      o += static_cast<std::size_t>(e[0]);
    }
  }
  return out;
}

Grid cropped_grid(const Grid& g, const Box& box) {
  Grid out = g;
  out.dims = box.extent();
  for (int a = 0; a < 3; ++a) {
    out.origin[a] = g.origin[a] + static_cast<double>(box.lo[a]) * g.spacing[a];
  }
  return out;
}

void require_kind(const ScalarVolume& v, VolumeKind want, const char* op) {
  if (v.kind() != want) {
    throw KindError(std::string(op) + " expects a " + std::string(to_string(want)) +
                    " volume, got " + std::string(to_string(v.kind())));
  }
}

}  // namespace

void SuvParams::validate() const {
  if (!(injected_dose_bq > 0.0)) throw DomainError("injected dose must be > 0");
  if (!(half_life_min > 0.0)) throw DomainError("half-life must be > 0");
  if (!(patient_weight_kg > 0.0)) throw DomainError("patient weight must be > 0");
  if (!(decay_interval_min >= 0.0)) throw DomainError("decay interval must be >= 0");
}

double SuvParams::decayed_dose_bq() const {
  return injected_dose_bq * std::exp2(-decay_interval_min / half_life_min);
}

double SuvParams::suv_factor() const {
  // weight in grams over decayed dose; activity is per ml (1 g/ml tissue).
  return 1000.0 * patient_weight_kg / decayed_dose_bq();
}

ScalarVolume bq_to_suv(const ScalarVolume& pet, const SuvParams& params) {
  require_kind(pet, VolumeKind::kPetBqml, "bq_to_suv");
  params.validate();
  const double factor = params.suv_factor();
  auto in = pet.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!std::isfinite(in[i])) {
      throw DataError("bq_to_suv: non-finite activity at voxel " + std::to_string(i));
    }
  }
  std::vector<double> out(in.size());
  const auto n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(i)] * factor;
  }
  return ScalarVolume(pet.grid(), std::move(out), VolumeKind::kPetSuv);
}

ScalarVolume clip_normalize_ct(const ScalarVolume& ct) {
  require_kind(ct, VolumeKind::kCtHu, "clip_normalize_ct");
  auto in = ct.data();
  std::vector<double> out(in.size());
  const auto n = static_cast<std::int64_t>(in.size());
  constexpr double span = kCtClipHighHu - kCtClipLowHu;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double hu = std::clamp(in[static_cast<std::size_t>(i)], kCtClipLowHu, kCtClipHighHu);
    out[static_cast<std::size_t>(i)] = (hu - kCtClipLowHu) / span;
  }
  return ScalarVolume(ct.grid(), std::move(out), VolumeKind::kCtNorm);
}

Box full_box(const Grid& grid) {
  return {{0, 0, 0}, {grid.dims[0] - 1, grid.dims[1] - 1, grid.dims[2] - 1}};
}

Box body_bounding_box(const ScalarVolume& ct, const ScalarVolume& pet, BodyThresholds thr) {
  if (ct.dims() != pet.dims()) throw ShapeError("body_bounding_box: CT and PET dims differ");
  const Grid& g = ct.grid();
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  Box box{{kMax, kMax, kMax}, {-1, -1, -1}};
  for (std::int64_t z = 0; z < g.dims[2]; ++z) {
    for (std::int64_t y = 0; y < g.dims[1]; ++y) {
      for (std::int64_t x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = g.index(x, y, z);
        if (ct[i] > thr.ct_hu || pet[i] > thr.suv) {
          const Index3 p{x, y, z};
          for (int a = 0; a < 3; ++a) {
            box.lo[a] = std::min(box.lo[a], p[a]);
            box.hi[a] = std::max(box.hi[a], p[a]);
          }
        }
      }
    }
  }
  if (box.hi[0] < 0) return full_box(g);
  return box;
}

ScalarVolume crop_to_box(const ScalarVolume& vol, const Box& box) {
  return ScalarVolume(cropped_grid(vol.grid(), box), crop_values(vol, box), vol.kind());
}

BinaryMask crop_to_box(const BinaryMask& mask, const Box& box) {
  return BinaryMask(cropped_grid(mask.grid(), box), crop_values(mask, box));
}

void ResampleSpec::validate() const {
  for (double s : target_spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DomainError("target spacing must be finite and > 0, got " + std::to_string(s));
    }
  }
}

Grid resampled_grid(const Grid& src, const Vec3& target_spacing) {
  ResampleSpec{target_spacing}.validate();
  Grid out = src;
  out.spacing = target_spacing;
  for (int a = 0; a < 3; ++a) {
    const double extent = static_cast<double>(src.dims[a]) * src.spacing[a] / target_spacing[a];
    // Tolerate round-off such as 3.0000000000000004 so exact ratios stay exact.
    out.dims[a] = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(extent - 1e-9 * std::max(1.0, extent))));
  }
  return out;
}

ScalarVolume resample(const ScalarVolume& vol, const ResampleSpec& spec) {
  spec.validate();
  return resample_to_grid(vol, resampled_grid(vol.grid(), spec.target_spacing),
                          spec.interpolation, kernels::OutOfBounds::kClamp);
}

BinaryMask resample(const BinaryMask& mask, const Vec3& target_spacing) {
  return resample_to_grid(mask, resampled_grid(mask.grid(), target_spacing),
                          kernels::OutOfBounds::kClamp);
}

Field<std::int32_t> resample(const LabelMap& labels, const Vec3& target_spacing) {
  const Grid dst = resampled_grid(labels.grid(), target_spacing);
  return Field<std::int32_t>(dst, kernels::resample_nearest<std::int32_t>(
                                      labels.grid(), labels.data(), dst,
                                      kernels::OutOfBounds::kClamp));
}

ScalarVolume resample_to_grid(const ScalarVolume& vol, const Grid& target, Interpolation interp,
                              kernels::OutOfBounds oob) {
  target.validate();
  std::vector<double> out =
      interp == Interpolation::kTrilinear
          ? kernels::resample_linear(vol.grid(), vol.data(), target, oob)
          : kernels::resample_nearest<double>(vol.grid(), vol.data(), target, oob);
  if (vol.kind() == VolumeKind::kProb || vol.kind() == VolumeKind::kCtNorm) {
    // Convex weights can overshoot [0, 1] by an ulp.
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  }
  return ScalarVolume(target, std::move(out), vol.kind());
}

BinaryMask resample_to_grid(const BinaryMask& mask, const Grid& target, kernels::OutOfBounds oob) {
  target.validate();
  return BinaryMask(target,
                    kernels::resample_nearest<std::uint8_t>(mask.grid(), mask.data(), target, oob));
}

}  // namespace petseg
