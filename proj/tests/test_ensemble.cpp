#include <doctest.h>

#include <cmath>
#include <set>

#include "petseg/components.hpp"
#include "petseg/ensemble.hpp"
#include "petseg/error.hpp"
#include "petseg/preprocess.hpp"

using namespace petseg;

namespace {

// Number of windows covering each voxel of the unpadded volume.
std::vector<int> coverage(const WindowPlan& plan) {
  const Grid g{plan.dims};
  std::vector<int> c(g.voxel_count(), 0);
  for (const Index3& o : plan.origins) {
    Index3 lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max<std::int64_t>(0, o[a] - plan.pad_lo[a]);
      hi[a] = std::min(plan.dims[a], o[a] - plan.pad_lo[a] + plan.window);
    }
    for (std::int64_t z = lo[2]; z < hi[2]; ++z)
      for (std::int64_t y = lo[1]; y < hi[1]; ++y)
        for (std::int64_t x = lo[0]; x < hi[0]; ++x) ++c[g.index(x, y, z)];
  }
  return c;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("window plans") {
  const WindowPlan one = plan_windows({192, 192, 192});
  CHECK(one.origins.size() == 1);
  CHECK(one.stride == 96);

  const WindowPlan two = plan_windows({288, 288, 288});
  for (const auto& axis : two.axis_origins) CHECK(axis == std::vector<std::int64_t>{0, 96});
  CHECK(two.origins.size() == 8);

  const WindowPlan small = plan_windows({100, 100, 100});
  CHECK(small.padded_dims == Index3{192, 192, 192});
  CHECK(small.pad_lo == Index3{46, 46, 46});
  CHECK(small.origins.size() == 1);

  const WindowPlan odd = plan_windows({193, 40, 300});
  CHECK(odd.axis_origins[0] == std::vector<std::int64_t>{0, 1});
  CHECK(odd.axis_origins[2] == std::vector<std::int64_t>{0, 96, 108});

  CHECK_THROWS_AS(plan_windows({10, 10, 10}, 0), DomainError);
  CHECK_THROWS_AS(plan_windows({10, 10, 10}, 8, 1.0), DomainError);
}

TEST_CASE("every voxel is covered") {
  for (const Index3 d : {Index3{17, 9, 30}, Index3{8, 8, 8}, Index3{33, 5, 21}}) {
    for (double ov : {0.0, 0.25, 0.5}) {
      const WindowPlan p = plan_windows(d, 8, ov);
      for (int c : coverage(p)) CHECK(c >= 1);
      CHECK(p.origins.size() == p.axis_origins[0].size() * p.axis_origins[1].size() *
                                    p.axis_origins[2].size());
    }
  }
}

TEST_CASE("constant predictor is tiling invariant") {
  const double want = sigmoid(1.5);
  for (const Index3 d : {Index3{16, 16, 16}, Index3{17, 23, 9}, Index3{25, 19, 37}}) {
    for (auto w : {BlendWeighting::kUniform, BlendWeighting::kGaussian}) {
      const Grid g{d, {2, 2, 2}, {0, 0, 0}};
      const ScalarVolume pet(g, 1.0), ct(g, 0.0);
      const WindowPlan plan = plan_windows(d, 8, 0.5);
      const ClassProbabilities out = sliding_window_inference(pet, ct, plan, constant_predictor(-0.5, 1.0), w);
      CHECK(out.foreground.grid() == g);
      for (std::size_t i = 0; i < out.foreground.size(); ++i) {
        CHECK(std::fabs(out.foreground[i] - want) <= 1e-12);
        CHECK(std::fabs(out.background[i] + out.foreground[i] - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("single window blend is the softmax") {
  const Grid g{{4, 4, 4}, {1, 1, 1}, {0, 0, 0}};
  const WindowPlan plan = plan_windows(g.dims, 4, 0.5);
  REQUIRE(plan.origins.size() == 1);
  ClassLogits l{std::vector<double>(64, 0.0), std::vector<double>(64)};
  for (std::size_t i = 0; i < 64; ++i) l.foreground[i] = 0.1 * static_cast<double>(i) - 3.0;
  const ClassProbabilities p = blend(plan, std::span<const ClassLogits>(&l, 1), g);
  for (std::size_t i = 0; i < 64; ++i) CHECK(p.foreground[i] == doctest::Approx(sigmoid(l.foreground[i])).epsilon(1e-14));
}

TEST_CASE("overlapping windows average their probabilities") {
  // Two windows of 4 along x over a 6-voxel row: x = 2, 3 are shared.
  const Grid g{{6, 4, 4}, {1, 1, 1}, {0, 0, 0}};
  const WindowPlan plan = plan_windows(g.dims, 4, 0.5);
  REQUIRE(plan.axis_origins[0] == std::vector<std::int64_t>{0, 2});
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  std::vector<ClassLogits> outs{{std::vector<double>(64, 0.0), std::vector<double>(64, logit(0.2))},
                                {std::vector<double>(64, 0.0), std::vector<double>(64, logit(0.6))}};
  const ClassProbabilities p = blend(plan, outs, g);
  CHECK(p.foreground.at(0, 1, 1) == doctest::Approx(0.2));
  CHECK(p.foreground.at(2, 1, 1) == doctest::Approx(0.4));
  CHECK(p.foreground.at(3, 0, 3) == doctest::Approx(0.4));
  CHECK(p.foreground.at(5, 1, 1) == doctest::Approx(0.6));
}

TEST_CASE("blend contract violations") {
  const Grid g{{6, 4, 4}, {1, 1, 1}, {0, 0, 0}};
  const WindowPlan plan = plan_windows(g.dims, 4, 0.5);
  std::vector<ClassLogits> one{{std::vector<double>(64, 0.0), std::vector<double>(64, 0.0)}};
  CHECK_THROWS_AS(blend(plan, one, g), ContractError);
  std::vector<ClassLogits> short_out{{std::vector<double>(64, 0.0), std::vector<double>(64, 0.0)},
                                     {std::vector<double>(63, 0.0), std::vector<double>(63, 0.0)}};
  CHECK_THROWS_AS(blend(plan, short_out, g), ContractError);
  std::vector<ClassLogits> nan_out{{std::vector<double>(64, 0.0), std::vector<double>(64, 0.0)},
                                   {std::vector<double>(64, 0.0), std::vector<double>(64, NAN)}};
  CHECK_THROWS_AS(blend(plan, nan_out, g), DataError);
  const Grid other{{5, 4, 4}, {1, 1, 1}, {0, 0, 0}};
  CHECK_THROWS_AS(blend(plan, short_out, other), ShapeError);
}

TEST_CASE("threshold predictor recovers a bright block") {
  const Grid g{{20, 12, 12}, {2, 2, 2}, {0, 0, 0}};
  std::vector<double> v(g.voxel_count(), 0.5);
  for (std::int64_t z = 4; z < 8; ++z)
    for (std::int64_t y = 4; y < 8; ++y)
      for (std::int64_t x = 10; x < 16; ++x) v[g.index(x, y, z)] = 6.0;
  const ScalarVolume pet(g, v, VolumeKind::kPetSuv), ct(g, 0.0);
  const ClassProbabilities p =
      sliding_window_inference(pet, ct, plan_windows(g.dims, 8, 0.5), pet_threshold_predictor(2.5));
  const BinaryMask m = binarize(p.foreground);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(m[i] == (v[i] > 2.5 ? 1 : 0));
}

TEST_CASE("average ensemble") {
  const Grid g{{5, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  std::vector<ScalarVolume> onehot;
  for (std::int64_t k = 0; k < 5; ++k) {
    std::vector<double> v(5, 0.0);
    v[static_cast<std::size_t>(k)] = 1.0;
    onehot.emplace_back(g, v, VolumeKind::kProb);
  }
  const ScalarVolume m = average_ensemble(onehot);
  for (double x : m.data()) CHECK(x == doctest::Approx(0.2).epsilon(1e-15));

  std::vector<ScalarVolume> pair{ScalarVolume(g, 0.0, VolumeKind::kProb), ScalarVolume(g, 1.0, VolumeKind::kProb)};
  const ScalarVolume half = average_ensemble(pair);
  for (double x : half.data()) CHECK(x == 0.5);
  const ScalarVolume half_logit = average_ensemble(pair, AverageMode::kLogit);
  for (double x : half_logit.data()) CHECK(x == doctest::Approx(0.5));

  std::vector<ScalarVolume> mixed{ScalarVolume(g, 0.5), ScalarVolume(Grid{{4, 1, 1}}, 0.5)};
  CHECK_THROWS_AS(average_ensemble(mixed), ShapeError);
  CHECK_THROWS_AS(average_ensemble(std::span<const ScalarVolume>()), DomainError);
}

TEST_CASE("binarize is strict") {
  const Grid g{{4, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const BinaryMask m = binarize(ScalarVolume(g, std::vector<double>{0.49, 0.5, 0.51, 1.0}));
  CHECK(m[0] == 0);
  CHECK(m[1] == 0);
  CHECK(m[2] == 1);
  CHECK(m[3] == 1);
  CHECK(binarize(ScalarVolume(g, 0.2)).foreground_count() == 0);
  CHECK(binarize(ScalarVolume(g, 0.8)).foreground_count() == 4);
}

TEST_CASE("resample to reference") {
  const Grid fine{{8, 8, 8}, {2, 2, 2}, {0, 0, 0}};
  std::vector<std::uint8_t> v(fine.voxel_count(), 0);
  for (std::int64_t z = 2; z < 6; ++z)
    for (std::int64_t y = 2; y < 6; ++y)
      for (std::int64_t x = 2; x < 6; ++x) v[fine.index(x, y, z)] = 1;
  const BinaryMask cube(fine, v);
  CHECK(resample_to_reference(cube, fine) == cube);

  const Grid coarse{{4, 4, 4}, {4, 4, 4}, {0, 0, 0}};
  const BinaryMask down = resample_to_reference(cube, coarse);
  CHECK(down.foreground_count() > 0);
  CHECK(label_components(down).n_components() == 1);

  const Grid finer{{16, 16, 16}, {1, 1, 1}, {0, 0, 0}};
  CHECK(resample_to_reference(resample_to_reference(cube, finer), fine) == cube);
}
