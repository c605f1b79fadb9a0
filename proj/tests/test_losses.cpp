#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "petseg/error.hpp"
#include "petseg/losses.hpp"

using namespace petseg;

namespace {

// One 2x2x2 patch with a single foreground voxel; softmax saturates to the targets.
PatchBatch perfect_patch(double margin = 60.0) {
  std::vector<double> logits(16, 0.0);
  std::vector<std::uint8_t> fg(8, 0);
  fg[0] = 1;
  for (std::size_t j = 0; j < 8; ++j) {
    logits[j] = fg[j] ? -margin / 2 : margin / 2;
    logits[8 + j] = fg[j] ? margin / 2 : -margin / 2;
  }
  return PatchBatch::from_foreground(1, 8, logits, fg);
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::fabs(a[k]), std::fabs(b[k]), 1e-6});
    worst = std::max(worst, std::fabs(a[k] - b[k]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("GDL on a perfect one-voxel patch") {
  const double want = 1.0 - (1.0 + 7.0 / 49.0 + 1e-5) / (2.0 * (1.0 + 7.0 / 49.0) + 1e-5);
  const double got = generalized_dice_loss(perfect_patch());
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::fabs(got - 0.499997) <= 1e-4);
}

TEST_CASE("GDL of the complement prediction approaches 1") {
  std::vector<double> logits(16);
  std::vector<std::uint8_t> fg(8, 0);
  fg[0] = 1;
  for (std::size_t j = 0; j < 8; ++j) {
    logits[j] = fg[j] ? 30.0 : -30.0;
    logits[8 + j] = -logits[j];
  }
  const double l = generalized_dice_loss(PatchBatch::from_foreground(1, 8, logits, fg));
  CHECK(l == doctest::Approx(1.0 - 1e-5 / (8.0 + 8.0 / 49.0 + 1e-5)).epsilon(1e-9));
}

TEST_CASE("batch mean invariance") {
  std::mt19937_64 rng(3);
  const PatchBatch one = oracle::random_batch(1, 27, rng);
  std::vector<double> logits(one.logits().begin(), one.logits().end());
  logits.insert(logits.end(), one.logits().begin(), one.logits().end());
  std::vector<std::uint8_t> targets(one.targets().begin(), one.targets().end());
  targets.insert(targets.end(), one.targets().begin(), one.targets().end());
  const PatchBatch two(2, 27, logits, targets);
  CHECK(generalized_dice_loss(two) == doctest::Approx(generalized_dice_loss(one)).epsilon(1e-14));
  CHECK(focal_loss(two) == doctest::Approx(focal_loss(one)).epsilon(1e-14));
}

TEST_CASE("focal loss hand values") {
  const PatchBatch b = PatchBatch::from_foreground(1, 1, {0.0, 0.0}, std::vector<std::uint8_t>{1});
  CHECK(std::fabs(focal_loss(b) - 17.32868) <= 1e-4);
  CHECK(focal_loss(b) == doctest::Approx(100.0 * 0.25 * std::log(2.0)).epsilon(1e-14));

  const PatchBatch sure = PatchBatch::from_foreground(1, 1, {0.0, 20.0}, std::vector<std::uint8_t>{1});
  CHECK(focal_loss(sure) < 1e-6);
}

TEST_CASE("losses match the term-by-term oracle") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    const PatchBatch b = oracle::random_batch(3, 64, rng);
    LossConfig cfg;
    if (t % 2) cfg.dice_numerator_factor = 2.0;
    CHECK(generalized_dice_loss(b, cfg) == doctest::Approx(oracle::gdl(b, cfg)).epsilon(1e-12));
    CHECK(focal_loss(b, cfg) == doctest::Approx(oracle::focal(b, cfg)).epsilon(1e-12));
    CHECK(std::fabs(gdfl(b, cfg) - (generalized_dice_loss(b, cfg) + focal_loss(b, cfg))) <= 1e-12);
  }
}

TEST_CASE("class absent from a patch takes the largest weight") {
  // No foreground: background weight 1/8^2 is used for both classes.
  const PatchBatch b = PatchBatch::from_foreground(1, 8, std::vector<double>(16, 0.0), std::vector<std::uint8_t>(8, 0));
  const LossConfig cfg;
  CHECK(generalized_dice_loss(b, cfg) == doctest::Approx(oracle::gdl(b, cfg)).epsilon(1e-14));
  CHECK(std::isfinite(generalized_dice_loss(b, cfg)));
}

TEST_CASE("analytic gradient against central differences") {
  std::mt19937_64 rng(41);
  const double h = 1e-4;
  for (int t = 0; t < 4; ++t) {
    const PatchBatch b = oracle::random_batch(2, 64, rng);
    CHECK(max_rel_error(gdfl_gradient(b), oracle::gdfl_central_difference(b, h)) <= 1e-4);
  }
}

TEST_CASE("gradient symmetry and saturation") {
  // Symmetric logits on a symmetric target pattern: class gradients are opposite.
  std::vector<std::uint8_t> fg{1, 0, 0, 1};
  std::vector<double> logits{-1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0};
  const PatchBatch b = PatchBatch::from_foreground(1, 4, logits, fg);
  const auto gd = generalized_dice_gradient(b);
  for (std::size_t j = 0; j < 4; ++j) CHECK(gd[j] == doctest::Approx(-gd[4 + j]));

  const auto gf = focal_gradient(b);
  for (std::size_t k = 0; k < gf.size(); ++k) {
    if (b.targets()[k] == 0) CHECK(gf[k] == 0.0);
  }
  const PatchBatch sat = PatchBatch::from_foreground(1, 1, {-30.0, 30.0}, std::vector<std::uint8_t>{1});
  for (double v : focal_gradient(sat)) CHECK(std::fabs(v) < 1e-10);
}

TEST_CASE("batch validation") {
  CHECK_THROWS_AS(PatchBatch(1, 2, std::vector<double>(4, 0.0), std::vector<std::uint8_t>{1, 1, 1, 0}),
                  DataError);
  CHECK_THROWS_AS(PatchBatch(1, 2, std::vector<double>(3, 0.0), std::vector<std::uint8_t>(4, 0)),
                  ShapeError);
  CHECK_THROWS_AS(PatchBatch::from_foreground(1, 1, {NAN, 0.0}, std::vector<std::uint8_t>{1}), DataError);
  LossConfig bad;
  bad.gamma = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
