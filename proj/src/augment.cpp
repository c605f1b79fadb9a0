#include "petseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "petseg/kernels/sampling.hpp"

namespace petseg {
namespace {

using kernels::OutOfBounds;

void require_range(const std::array<double, 2>& r, const char* name) {
  if (!(r[0] <= r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1])) {
    throw DomainError(std::string(name) + " range is empty or not finite");
  }
}

template <typename T>
std::vector<T> patch_values(const Field<T>& f, const PatchPlacement& p, Grid& out_grid) {
  const Grid& g = f.grid();
  out_grid = g;
  out_grid.dims = {p.size, p.size, p.size};
  Index3 shift{};
  for (int a = 0; a < 3; ++a) {
    shift[a] = p.offset[a] - p.pad_lo[a];
    out_grid.origin[a] = g.origin[a] + static_cast<double>(shift[a]) * g.spacing[a];
  }
  std::vector<T> out(out_grid.voxel_count(), T{});
  for (std::int64_t z = 0; z < p.size; ++z) {
    for (std::int64_t y = 0; y < p.size; ++y) {
      for (std::int64_t x = 0; x < p.size; ++x) {
        const std::int64_t sx = x + shift[0], sy = y + shift[1], sz = z + shift[2];
        if (g.contains(sx, sy, sz)) out[out_grid.index(x, y, z)] = f.at(sx, sy, sz);
      }
    }
  }
  return out;
}

// Calls sample(out_index, sx, sy, sz) with the source continuous index of every
// output voxel under the inverse affine map.
template <typename Sample>
void for_each_affine_source(const Grid& g, const AffineParams& a, Sample&& sample) {
  const double c0 = static_cast<double>(g.dims[0] - 1) / 2.0;
  const double c1 = static_cast<double>(g.dims[1] - 1) / 2.0;
  const double c2 = static_cast<double>(g.dims[2] - 1) / 2.0;
  const double cs = std::cos(a.rotation), sn = std::sin(a.rotation);
  const double inv_scale = 1.0 / a.scale;
  const std::int64_t nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        const double qx = static_cast<double>(x) - c0 - a.translation[0];
        const double qy = static_cast<double>(y) - c1 - a.translation[1];
        const double qz = static_cast<double>(z) - c2 - a.translation[2];
        // Rotation by -theta undoes the forward rotation.
        const double rx = cs * qx + sn * qy;
        const double ry = -sn * qx + cs * qy;
        sample(g.index(x, y, z), c0 + rx * inv_scale, c1 + ry * inv_scale, c2 + qz * inv_scale);
      }
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::int64_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian smoothing with border clamping.
std::vector<double> smooth(const std::vector<double>& in, const Grid& g, double sigma) {
  if (sigma < 1e-6) return in;
  const std::vector<double> k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::int64_t>(k.size() / 2);
  std::vector<double> cur = in, next(in.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::int64_t z = 0; z < g.dims[2]; ++z) {
      for (std::int64_t y = 0; y < g.dims[1]; ++y) {
        for (std::int64_t x = 0; x < g.dims[0]; ++x) {
          Index3 p{x, y, z};
          double acc = 0.0;
          for (std::int64_t t = -radius; t <= radius; ++t) {
            Index3 q = p;
            q[axis] = std::clamp<std::int64_t>(p[axis] + t, 0, g.dims[axis] - 1);
            acc += k[static_cast<std::size_t>(t + radius)] * cur[g.index(q)];
          }
          next[g.index(p)] = acc;
        }
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

template <typename Sample>
void for_each_elastic_source(const Grid& g, const ElasticParams& params, Sample&& sample) {
  const auto d = displacement_field(params, g.dims);
  const auto n = static_cast<std::int64_t>(g.voxel_count());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const Index3 p = g.coords(i);
    sample(i, static_cast<double>(p[0]) + d[0][i], static_cast<double>(p[1]) + d[1][i],
           static_cast<double>(p[2]) + d[2][i]);
  }
}

// Interpolation can leave [0, 1] by an ulp; range-limited kinds are re-clamped.
ScalarVolume make_like(const ScalarVolume& src, std::vector<double> values) {
  if (src.kind() == VolumeKind::kProb || src.kind() == VolumeKind::kCtNorm) {
    for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  }
  return ScalarVolume(src.grid(), std::move(values), src.kind());
}

VolumeKind noisy_kind(VolumeKind k) {
  return (k == VolumeKind::kProb || k == VolumeKind::kCtNorm) ? VolumeKind::kGeneric : k;
}

}  // namespace

void AugmentConfig::validate() const {
  if (patch_size < 1) throw DomainError("patch size must be >= 1");
  require_range(translate_range, "translation");
  require_range(rotation_range, "rotation");
  require_range(elastic_sigma_range, "elastic sigma");
  require_range(elastic_offset_range, "elastic offset");
  require_range(gamma_range, "gamma");
  if (!(gamma_range[0] > 0.0)) throw DomainError("gamma range must be positive");
  if (!(scale_factor_max >= 1.0)) throw DomainError("scale factor must be >= 1");
  if (elastic_sigma_range[0] < 0.0) throw DomainError("elastic sigma must be >= 0");
  if (elastic_pitch < 1) throw DomainError("elastic control pitch must be >= 1");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
}

CounterRng augment_stream(const AugmentConfig& cfg, std::uint64_t call_index, AugmentStream s) {
  return CounterRng::stream(cfg.seed, call_index, static_cast<std::uint64_t>(s));
}

PatchPlacement draw_patch(const Index3& dims, const AugmentConfig& cfg, CounterRng& rng) {
  PatchPlacement p;
  p.size = cfg.patch_size;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t padded = std::max(dims[a], cfg.patch_size);
    p.pad_lo[a] = (padded - dims[a]) / 2;
    p.offset[a] = rng.uniform_int(padded - cfg.patch_size);
  }
  return p;
}

ScalarVolume extract_patch(const ScalarVolume& vol, const PatchPlacement& p) {
  Grid g;
  std::vector<double> v = patch_values(vol, p, g);
  return ScalarVolume(g, std::move(v), vol.kind());
}

BinaryMask extract_patch(const BinaryMask& mask, const PatchPlacement& p) {
  Grid g;
  std::vector<std::uint8_t> v = patch_values(mask, p, g);
  return BinaryMask(g, std::move(v));
}

ScalarVolume random_patch(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng) {
  cfg.validate();
  return extract_patch(vol, draw_patch(vol.dims(), cfg, rng));
}

AffineParams draw_affine(const AugmentConfig& cfg, CounterRng& rng) {
  AffineParams a;
  for (int ax = 0; ax < 3; ++ax) {
    a.translation[ax] = cfg.signed_translation
                            ? rng.uniform(-cfg.translate_range[1], cfg.translate_range[1])
                            : rng.uniform(cfg.translate_range[0], cfg.translate_range[1]);
  }
  a.rotation = rng.uniform(cfg.rotation_range[0], cfg.rotation_range[1]);
  a.scale = rng.uniform(1.0 / cfg.scale_factor_max, cfg.scale_factor_max);
  return a;
}

ScalarVolume apply_affine(const ScalarVolume& vol, const AffineParams& params) {
  const Grid& g = vol.grid();
  std::vector<double> out(vol.size(), 0.0);
  for_each_affine_source(g, params, [&](std::size_t i, double sx, double sy, double sz) {
    out[i] = kernels::sample_linear(g, vol.data(), sx, sy, sz, OutOfBounds::kZero);
  });
  return make_like(vol, std::move(out));
}

BinaryMask apply_affine(const BinaryMask& mask, const AffineParams& params) {
  const Grid& g = mask.grid();
  std::vector<std::uint8_t> out(mask.size(), 0);
  for_each_affine_source(g, params, [&](std::size_t i, double sx, double sy, double sz) {
    out[i] = kernels::sample_nearest<std::uint8_t>(g, mask.data(), sx, sy, sz, OutOfBounds::kZero);
  });
  return BinaryMask(g, std::move(out));
}

ScalarVolume affine_augment(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng) {
  cfg.validate();
  return apply_affine(vol, draw_affine(cfg, rng));
}

ElasticParams draw_elastic(const Index3& dims, const AugmentConfig& cfg, CounterRng& rng) {
  ElasticParams p;
  p.pitch = cfg.elastic_pitch;
  p.sigma = rng.uniform(cfg.elastic_sigma_range[0], cfg.elastic_sigma_range[1]);
  for (int a = 0; a < 3; ++a) {
    p.control_dims[a] = (dims[a] - 1 + p.pitch - 1) / p.pitch + 1;
  }
  const std::size_t n = static_cast<std::size_t>(p.control_dims[0] * p.control_dims[1] *
                                                 p.control_dims[2]);
  for (auto& comp : p.offsets) {
    comp.resize(n);
    for (double& v : comp) v = rng.uniform(cfg.elastic_offset_range[0], cfg.elastic_offset_range[1]);
  }
  return p;
}

std::array<std::vector<double>, 3> displacement_field(const ElasticParams& params,
                                                      const Index3& dims) {
  const Grid control{params.control_dims};
  const Grid dense{dims};
  std::array<std::vector<double>, 3> out;
  for (int c = 0; c < 3; ++c) {
    if (params.offsets[c].size() != control.voxel_count()) {
      throw ShapeError("elastic offsets do not match the control lattice");
    }
    const std::vector<double> smoothed = smooth(params.offsets[c], control, params.sigma);
    out[c].resize(dense.voxel_count());
    const double inv_pitch = 1.0 / static_cast<double>(params.pitch);
    for (std::size_t i = 0; i < out[c].size(); ++i) {
      const Index3 p = dense.coords(i);
      out[c][i] = kernels::sample_linear(control, smoothed, static_cast<double>(p[0]) * inv_pitch,
                                         static_cast<double>(p[1]) * inv_pitch,
                                         static_cast<double>(p[2]) * inv_pitch, OutOfBounds::kClamp);
    }
  }
  return out;
}

ScalarVolume apply_elastic(const ScalarVolume& vol, const ElasticParams& params) {
  const Grid& g = vol.grid();
  std::vector<double> out(vol.size());
  for_each_elastic_source(g, params, [&](std::size_t i, double sx, double sy, double sz) {
    out[i] = kernels::sample_linear(g, vol.data(), sx, sy, sz, OutOfBounds::kClamp);
  });
  return make_like(vol, std::move(out));
}

BinaryMask apply_elastic(const BinaryMask& mask, const ElasticParams& params) {
  const Grid& g = mask.grid();
  std::vector<std::uint8_t> out(mask.size());
  for_each_elastic_source(g, params, [&](std::size_t i, double sx, double sy, double sz) {
    out[i] = kernels::sample_nearest<std::uint8_t>(g, mask.data(), sx, sy, sz, OutOfBounds::kClamp);
  });
  return BinaryMask(g, std::move(out));
}

ScalarVolume elastic_deform(const ScalarVolume& vol, const AugmentConfig& cfg, CounterRng& rng) {
  cfg.validate();
  return apply_elastic(vol, draw_elastic(vol.dims(), cfg, rng));
}

ScalarVolume gamma_correct(const ScalarVolume& vol, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
  const auto data = vol.data();
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return vol;
  const double range = hi - lo;
  std::vector<double> out(data.size());
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = data[static_cast<std::size_t>(i)];
    // Pin the endpoints: lo + (hi - lo) need not round back to hi.
    out[static_cast<std::size_t>(i)] =
        x == hi ? hi : std::clamp(lo + range * std::pow((x - lo) / range, gamma), lo, hi);
  }
  return ScalarVolume(vol.grid(), std::move(out), vol.kind());
}

ScalarVolume add_gaussian_noise(const ScalarVolume& vol, const AugmentConfig& cfg,
                                const CounterRng& rng) {
  const std::uint64_t key = rng.key();
  const auto data = vol.data();
  std::vector<double> out(data.size());
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = data[k] + cfg.noise_mu + cfg.noise_sigma * CounterRng::normal_at(key, k);
  }
  return ScalarVolume(vol.grid(), std::move(out), noisy_kind(vol.kind()));
}

AugmentSample augment_case(const ScalarVolume& pet, const ScalarVolume& ct,
                           const std::optional<BinaryMask>& mask, const AugmentConfig& cfg,
                           std::uint64_t call_index) {
  cfg.validate();
  require_same_lattice(pet.grid(), ct.grid(), "augment_case (PET vs CT)");
  if (mask) require_same_lattice(pet.grid(), mask->grid(), "augment_case (PET vs mask)");

  AugmentDraw draw;
  draw.call_index = call_index;
  CounterRng patch_rng = augment_stream(cfg, call_index, AugmentStream::kPatch);
  draw.patch = draw_patch(pet.dims(), cfg, patch_rng);
  CounterRng affine_rng = augment_stream(cfg, call_index, AugmentStream::kAffine);
  draw.affine = draw_affine(cfg, affine_rng);
  CounterRng elastic_rng = augment_stream(cfg, call_index, AugmentStream::kElastic);
  const Index3 patch_dims{cfg.patch_size, cfg.patch_size, cfg.patch_size};
  const ElasticParams elastic = draw_elastic(patch_dims, cfg, elastic_rng);
  draw.elastic_sigma = elastic.sigma;
  CounterRng gp = augment_stream(cfg, call_index, AugmentStream::kGammaPet);
  draw.gamma_pet = gp.uniform(cfg.gamma_range[0], cfg.gamma_range[1]);
  CounterRng gc = augment_stream(cfg, call_index, AugmentStream::kGammaCt);
  draw.gamma_ct = gc.uniform(cfg.gamma_range[0], cfg.gamma_range[1]);

  auto image_chain = [&](const ScalarVolume& v, double gamma, AugmentStream noise) {
    ScalarVolume out = extract_patch(v, draw.patch);
    out = apply_affine(out, draw.affine);
    out = apply_elastic(out, elastic);
    out = gamma_correct(out, gamma);
    return add_gaussian_noise(out, cfg, augment_stream(cfg, call_index, noise));
  };

  AugmentSample s;
  s.pet = image_chain(pet, draw.gamma_pet, AugmentStream::kNoisePet);
  s.ct = image_chain(ct, draw.gamma_ct, AugmentStream::kNoiseCt);
  if (mask) {
    BinaryMask m = extract_patch(*mask, draw.patch);
    m = apply_affine(m, draw.affine);
    s.mask = apply_elastic(m, elastic);
  }
  s.draw = draw;
  return s;
}

}  // namespace petseg
