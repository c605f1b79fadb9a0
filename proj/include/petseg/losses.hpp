#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace petseg {

struct LossConfig {
  double epsilon = 1e-5;  // added to the Dice numerator
  double eta = 1e-5;      // added to the Dice denominator
  std::array<double, 2> focal_weights{1.0, 100.0};  // v_0 (background), v_1 (foreground)
  double gamma = 2.0;
  // 1 reproduces the printed Generalized Dice ratio; 2 gives the usual Dice form.
  double dice_numerator_factor = 1.0;
  // Floor applied to sigmoid outputs before the focal log.
  double log_floor = 1e-12;

  void validate() const;
};

// Logits and one-hot targets for n_b patches of V voxels and two classes,
// stored patch-major then class then voxel.
class PatchBatch {
 public:
  PatchBatch(std::size_t patches, std::size_t voxels, std::vector<double> logits,
             std::vector<std::uint8_t> targets);

  // Targets from a foreground mask per patch (class 1 = foreground).
  static PatchBatch from_foreground(std::size_t patches, std::size_t voxels,
                                    std::vector<double> logits,
                                    std::span<const std::uint8_t> foreground);

  std::size_t patches() const { return patches_; }
  std::size_t voxels() const { return voxels_; }
  std::size_t index(std::size_t patch, int cls, std::size_t voxel) const {
    return (patch * 2 + static_cast<std::size_t>(cls)) * voxels_ + voxel;
  }
  double logit(std::size_t patch, int cls, std::size_t voxel) const {
    return logits_[index(patch, cls, voxel)];
  }
  std::uint8_t target(std::size_t patch, int cls, std::size_t voxel) const {
    return targets_[index(patch, cls, voxel)];
  }
  std::span<const double> logits() const { return logits_; }
  std::span<const std::uint8_t> targets() const { return targets_; }

  // Same targets, new logits (validated).
  PatchBatch with_logits(std::vector<double> logits) const;

 private:
  std::size_t patches_;
  std::size_t voxels_;
  std::vector<double> logits_;
  std::vector<std::uint8_t> targets_;
};

// Class probabilities come from a softmax over the two logits. Class weights
// are 1 / (sum of targets)^2; a class absent from a patch takes the largest
// finite weight of that patch (0 if neither class is present).
double generalized_dice_loss(const PatchBatch& batch, const LossConfig& cfg = {});

// Per-channel sigmoid of the logits, weighted by v_l and (1 - sigma)^gamma.
double focal_loss(const PatchBatch& batch, const LossConfig& cfg = {});

double gdfl(const PatchBatch& batch, const LossConfig& cfg = {});

// Analytic derivatives with respect to every logit, in PatchBatch layout.
std::vector<double> generalized_dice_gradient(const PatchBatch& batch, const LossConfig& cfg = {});
std::vector<double> focal_gradient(const PatchBatch& batch, const LossConfig& cfg = {});
std::vector<double> gdfl_gradient(const PatchBatch& batch, const LossConfig& cfg = {});

}  // namespace petseg
