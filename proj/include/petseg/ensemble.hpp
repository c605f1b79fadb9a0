#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "petseg/volume.hpp"

namespace petseg {

// Sliding-window tiling of a volume. Axes shorter than the window are
// zero-padded symmetrically (extra voxel after) up to the window size.
struct WindowPlan {
  Index3 dims{1, 1, 1};
  std::int64_t window = 192;
  double overlap = 0.5;
  std::int64_t stride = 96;
  Index3 padded_dims{1, 1, 1};
  Index3 pad_lo{0, 0, 0};
  std::array<std::vector<std::int64_t>, 3> axis_origins;
  // Window origins in padded coordinates, x index fastest.
  std::vector<Index3> origins;
  // Position of each window in the per-axis origin lists.
  std::vector<Index3> indices;

  Index3 window_dims() const { return {window, window, window}; }
};

// stride = floor(window * (1 - overlap)), at least 1. Per axis, origins step by
// the stride and the last one is clamped to padded - window so the final
// window abuts the border.
WindowPlan plan_windows(const Index3& dims, std::int64_t window = 192, double overlap = 0.5);

// Two-channel logits over one window (window^3 voxels, x fastest).
struct ClassLogits {
  std::vector<double> background;
  std::vector<double> foreground;
};

struct ClassProbabilities {
  ScalarVolume background;
  ScalarVolume foreground;
};

enum class BlendWeighting { kUniform, kGaussian };

// Voxelwise weighted mean of the per-window softmax probabilities over all
// covering windows, accumulated in origin order, padding removed. `grid`
// supplies spacing and origin of the unpadded volume.
ClassProbabilities blend(const WindowPlan& plan, std::span<const ClassLogits> window_logits,
                         const Grid& grid, BlendWeighting weighting = BlendWeighting::kUniform);

// Zero-padded window of `vol` at padded-coordinate origin `origin`.
ScalarVolume extract_window(const ScalarVolume& vol, const WindowPlan& plan, const Index3& origin);

// (pet_patch, ct_patch) -> logits with the patch's voxel count.
using Predictor = std::function<ClassLogits(const ScalarVolume& pet, const ScalarVolume& ct)>;

ClassProbabilities sliding_window_inference(const ScalarVolume& pet, const ScalarVolume& ct,
                                            const WindowPlan& plan, const Predictor& predictor,
                                            BlendWeighting weighting = BlendWeighting::kUniform);

// Built-in synthetic predictors.
Predictor constant_predictor(double background_logit, double foreground_logit);
// Foreground logit sharpness * (pet - threshold), background logit 0.
Predictor pet_threshold_predictor(double threshold, double sharpness = 10.0);

enum class AverageMode { kProbability, kLogit };

// Voxelwise mean of probability maps on identical grids. kLogit averages
// logit(p) (p clamped to [1e-12, 1 - 1e-12]) and maps back through the sigmoid.
ScalarVolume average_ensemble(std::span<const ScalarVolume> probs,
                              AverageMode mode = AverageMode::kProbability);

// 1 where prob > threshold (strict).
BinaryMask binarize(const ScalarVolume& prob, double threshold = 0.5);

// Nearest-neighbour resample onto the reference lattice; zero outside the mask.
BinaryMask resample_to_reference(const BinaryMask& mask, const Grid& reference);

}  // namespace petseg
