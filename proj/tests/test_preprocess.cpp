#include <doctest.h>

#include <cmath>
#include <set>

#include "petseg/error.hpp"
#include "petseg/preprocess.hpp"

using namespace petseg;

namespace {

ScalarVolume affine_field(const Grid& g, double a0, double a1, double a2, double b) {
  std::vector<double> v(g.voxel_count());
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x)
        v[g.index(x, y, z)] = a0 * static_cast<double>(x) * g.spacing[0] +
                              a1 * static_cast<double>(y) * g.spacing[1] +
                              a2 * static_cast<double>(z) * g.spacing[2] + b;
  return ScalarVolume(g, std::move(v));
}

}  // namespace

TEST_CASE("SUV hand case") {
  // One half-life after injection the decayed dose is half the injected one.
  const SuvParams p{3.7e8, kHalfLifeF18Min, kHalfLifeF18Min, 70.0};
  CHECK(p.decayed_dose_bq() == doctest::Approx(1.85e8));
  const double conc = 1.85e8 / 70000.0;  // Bq/ml giving SUV 1
  const Grid g{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const ScalarVolume suv = bq_to_suv(ScalarVolume(g, conc, VolumeKind::kPetBqml), p);
  CHECK(suv.kind() == VolumeKind::kPetSuv);
  CHECK(std::fabs(suv[0] - 1.0) <= 1e-12);

  SuvParams later = p;
  later.decay_interval_min += kHalfLifeF18Min;
  CHECK(later.suv_factor() / p.suv_factor() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("SUV contract") {
  const Grid g{{2, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const SuvParams p{3.7e8, 0.0, kHalfLifeF18Min, 70.0};
  CHECK_THROWS_AS(bq_to_suv(ScalarVolume(g, 1.0, VolumeKind::kPetSuv), p), KindError);
  CHECK_THROWS_AS(bq_to_suv(ScalarVolume(g, 1.0, VolumeKind::kPetBqml), SuvParams{0.0, 0.0, 100.0, 70.0}),
                  DomainError);
  CHECK_THROWS_AS(bq_to_suv(ScalarVolume(g, 1.0, VolumeKind::kPetBqml), SuvParams{1e8, 0.0, 100.0, -1.0}),
                  DomainError);
  CHECK_THROWS_AS(
      bq_to_suv(ScalarVolume(g, std::vector<double>{1.0, NAN}, VolumeKind::kPetBqml), p), DataError);
  CHECK(SuvParams{1e8, 0.0, kHalfLifeGa68Min, 70.0}.decayed_dose_bq() == 1e8);
}

TEST_CASE("CT clip and normalize") {
  const Grid g{{5, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const ScalarVolume ct(g, std::vector<double>{-3000, -1024, 0, 1024, 3000}, VolumeKind::kCtHu);
  const ScalarVolume n = clip_normalize_ct(ct);
  CHECK(n.kind() == VolumeKind::kCtNorm);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == 0.0);
  CHECK(n[2] == 0.5);
  CHECK(n[3] == 1.0);
  CHECK(n[4] == 1.0);
  CHECK_THROWS_AS(clip_normalize_ct(n), KindError);
}

TEST_CASE("body box and crop") {
  const Grid g{{6, 5, 4}, {2, 2, 2}, {10, 20, 30}};
  ScalarVolume ct(g, -1000.0, VolumeKind::kCtHu);
  ScalarVolume pet(g, 0.0, VolumeKind::kPetSuv);
  CHECK(body_bounding_box(ct, pet) == full_box(g));

  std::vector<double> c(ct.data().begin(), ct.data().end());
  c[g.index(1, 1, 1)] = 0.0;
  std::vector<double> s(g.voxel_count(), 0.0);
  s[g.index(4, 3, 2)] = 0.5;
  s[g.index(5, 4, 3)] = 0.1;  // not above the threshold
  ct = ScalarVolume(g, c, VolumeKind::kCtHu);
  pet = ScalarVolume(g, s, VolumeKind::kPetSuv);
  const Box box = body_bounding_box(ct, pet);
  CHECK(box == Box{{1, 1, 1}, {4, 3, 2}});

  const ScalarVolume cropped = crop_to_box(pet, box);
  CHECK(cropped.dims() == Index3{4, 3, 2});
  CHECK(cropped.grid().origin == Vec3{12, 22, 32});
  CHECK(cropped.at(3, 2, 1) == 0.5);
  CHECK_THROWS_AS(crop_to_box(pet, Box{{0, 0, 0}, {6, 0, 0}}), BoundsError);
  CHECK_THROWS_AS(body_bounding_box(ct, ScalarVolume(Grid{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}}, 0.0)),
                  ShapeError);
}

TEST_CASE("trilinear reproduces affine fields under 2 mm to 1 mm") {
  const Grid g{{7, 6, 5}, {2, 2, 2}, {0, 0, 0}};
  const ScalarVolume f = affine_field(g, 0.3, -1.7, 2.5, 4.0);
  const ScalarVolume up = resample(f, ResampleSpec{{1, 1, 1}, Interpolation::kTrilinear});
  CHECK(up.dims() == Index3{14, 12, 10});
  double worst = 0.0;
  for (std::int64_t z = 0; z < 10; ++z)
    for (std::int64_t y = 0; y < 12; ++y)
      for (std::int64_t x = 0; x < 14; ++x) {
        // Border samples past the last voxel centre clamp to it.
        const double px = std::min<double>(static_cast<double>(x), 12.0);
        const double py = std::min<double>(static_cast<double>(y), 10.0);
        const double pz = std::min<double>(static_cast<double>(z), 8.0);
        const double want = 0.3 * px - 1.7 * py + 2.5 * pz + 4.0;
        worst = std::max(worst, std::fabs(up.at(x, y, z) - want));
      }
  CHECK(worst <= 1e-6);
}

TEST_CASE("nearest keeps label sets and 2-1-2 mm round trips exactly") {
  const Grid g{{9, 8, 7}, {2, 2, 2}, {0, 0, 0}};
  std::vector<std::int32_t> lab(g.voxel_count(), 0);
  std::vector<std::uint8_t> m(g.voxel_count(), 0);
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (i % 7 == 0) lab[i] = 1 + static_cast<std::int32_t>(i % 3);
    m[i] = (i * 2654435761u) % 5 == 0;
  }
  const LabelMap labels(g, lab, 3);
  const auto up = resample(labels, {1, 1, 1});
  std::set<std::int32_t> before(lab.begin(), lab.end());
  std::set<std::int32_t> after(up.data().begin(), up.data().end());
  CHECK(before == after);

  const BinaryMask mask(g, m);
  const BinaryMask fine = resample(mask, {1, 1, 1});
  const BinaryMask back = resample(fine, {2, 2, 2});
  CHECK(back == mask);
}

TEST_CASE("resampled grid dims") {
  const Grid g{{10, 3, 7}, {1.5, 2.0, 0.7}, {0, 0, 0}};
  const Grid out = resampled_grid(g, {2, 2, 2});
  CHECK(out.dims == Index3{8, 3, 3});
  CHECK_THROWS_AS(resampled_grid(g, {0, 2, 2}), DomainError);
}

TEST_CASE("probability resampling stays in range") {
  const Grid g{{3, 3, 3}, {3, 3, 3}, {0, 0, 0}};
  std::vector<double> v(27);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2) ? 1.0 : 0.0;
  const ScalarVolume p(g, v, VolumeKind::kProb);
  const ScalarVolume r = resample(p, ResampleSpec{{1.1, 1.3, 0.9}});
  CHECK(r.kind() == VolumeKind::kProb);
  for (double x : r.data()) CHECK((x >= 0.0 && x <= 1.0));
}
