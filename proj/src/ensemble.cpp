#include "petseg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "petseg/kernels/kernels.hpp"

namespace petseg {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> gaussian_weights(std::int64_t window) {
  const double sigma = static_cast<double>(window) / 8.0;
  const double c = static_cast<double>(window - 1) / 2.0;
  std::vector<double> axis(static_cast<std::size_t>(window));
  for (std::int64_t i = 0; i < window; ++i) {
    const double d = (static_cast<double>(i) - c) / sigma;
    axis[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d);
  }
  std::vector<double> w(static_cast<std::size_t>(window * window * window));
  std::size_t k = 0;
  for (std::int64_t z = 0; z < window; ++z) {
    for (std::int64_t y = 0; y < window; ++y) {
      for (std::int64_t x = 0; x < window; ++x) {
        w[k++] = axis[static_cast<std::size_t>(x)] * axis[static_cast<std::size_t>(y)] *
                 axis[static_cast<std::size_t>(z)];
      }
    }
  }
  return w;
}

Grid padded_grid(const WindowPlan& plan, const Grid& grid) {
  Grid g = grid;
  g.dims = plan.padded_dims;
  for (int a = 0; a < 3; ++a) {
    g.origin[a] = grid.origin[a] - static_cast<double>(plan.pad_lo[a]) * grid.spacing[a];
  }
  return g;
}

// Streams window outputs into per-class accumulators in origin order.
class WindowBlender {
 public:
  WindowBlender(const WindowPlan& plan, const Grid& grid, BlendWeighting weighting)
      : plan_(plan), grid_(grid), padded_(padded_grid(plan, grid)) {
    if (grid.dims != plan.dims) throw ShapeError("blend: grid dims do not match the window plan");
    const std::size_t n = padded_.voxel_count();
    acc_bg_.assign(n, 0.0);
    acc_fg_.assign(n, 0.0);
    weight_sum_.assign(n, 0.0);
    if (weighting == BlendWeighting::kGaussian) weights_ = gaussian_weights(plan.window);
  }

  void add(std::size_t window_index, const ClassLogits& logits) {
    if (window_index != next_) {
      throw ContractError("window outputs must arrive in plan order; expected " +
                          std::to_string(next_) + ", got " + std::to_string(window_index));
    }
    const auto voxels = static_cast<std::size_t>(plan_.window * plan_.window * plan_.window);
    if (logits.background.size() != voxels || logits.foreground.size() != voxels) {
      throw ContractError("window " + std::to_string(window_index) + " output has " +
                          std::to_string(logits.foreground.size()) + " voxels, expected " +
                          std::to_string(voxels));
    }
    for (std::size_t k = 0; k < voxels; ++k) {
      if (std::isnan(logits.foreground[k]) || std::isnan(logits.background[k])) {
        throw DataError("window " + std::to_string(window_index) + " has a NaN logit at voxel " +
                        std::to_string(k));
      }
    }
    std::vector<double> p_bg(voxels), p_fg(voxels);
    const auto n = static_cast<std::int64_t>(voxels);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double margin = logits.foreground[k] - logits.background[k];
      p_fg[k] = sigmoid(margin);
      p_bg[k] = sigmoid(-margin);
    }
    const kernels::WindowSlot slot{plan_.origins[window_index], plan_.window_dims()};
    kernels::accumulate_window(padded_, slot, p_bg, weights_, acc_bg_, {});
    kernels::accumulate_window(padded_, slot, p_fg, weights_, acc_fg_, weight_sum_);
    ++next_;
  }

  ClassProbabilities finish() const {
    if (next_ != plan_.origins.size()) {
      throw ContractError("missing window outputs: got " + std::to_string(next_) + " of " +
                          std::to_string(plan_.origins.size()));
    }
    std::vector<double> bg(grid_.voxel_count()), fg(grid_.voxel_count());
    const std::int64_t nx = grid_.dims[0], ny = grid_.dims[1], nz = grid_.dims[2];
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t z = 0; z < nz; ++z) {
      for (std::int64_t y = 0; y < ny; ++y) {
        for (std::int64_t x = 0; x < nx; ++x) {
          const std::size_t s =
              padded_.index(x + plan_.pad_lo[0], y + plan_.pad_lo[1], z + plan_.pad_lo[2]);
          const std::size_t d = grid_.index(x, y, z);
          // Convex averages can land an ulp outside [0, 1].
          bg[d] = std::clamp(acc_bg_[s] / weight_sum_[s], 0.0, 1.0);
          fg[d] = std::clamp(acc_fg_[s] / weight_sum_[s], 0.0, 1.0);
        }
      }
    }
    return {ScalarVolume(grid_, std::move(bg), VolumeKind::kProb),
            ScalarVolume(grid_, std::move(fg), VolumeKind::kProb)};
  }

 private:
  const WindowPlan& plan_;
  Grid grid_;
  Grid padded_;
  std::vector<double> acc_bg_, acc_fg_, weight_sum_, weights_;
  std::size_t next_ = 0;
};

}  // namespace

WindowPlan plan_windows(const Index3& dims, std::int64_t window, double overlap) {
  if (window < 1) throw DomainError("window size must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw DomainError("overlap must lie in [0, 1)");
  Grid{dims}.validate();
  WindowPlan plan;
  plan.dims = dims;
  plan.window = window;
  plan.overlap = overlap;
  plan.stride = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(static_cast<double>(window) * (1.0 - overlap))));
  for (int a = 0; a < 3; ++a) {
    plan.padded_dims[a] = std::max(dims[a], window);
    plan.pad_lo[a] = (plan.padded_dims[a] - dims[a]) / 2;
    auto& o = plan.axis_origins[a];
    std::int64_t pos = 0;
    o.push_back(pos);
    while (pos + window < plan.padded_dims[a]) {
      pos = std::min(pos + plan.stride, plan.padded_dims[a] - window);
      o.push_back(pos);
    }
  }
  for (std::size_t k = 0; k < plan.axis_origins[2].size(); ++k) {
    for (std::size_t j = 0; j < plan.axis_origins[1].size(); ++j) {
      for (std::size_t i = 0; i < plan.axis_origins[0].size(); ++i) {
        plan.origins.push_back(
            {plan.axis_origins[0][i], plan.axis_origins[1][j], plan.axis_origins[2][k]});
        plan.indices.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j),
                                static_cast<std::int64_t>(k)});
      }
    }
  }
  return plan;
}

ClassProbabilities blend(const WindowPlan& plan, std::span<const ClassLogits> window_logits,
                         const Grid& grid, BlendWeighting weighting) {
  if (window_logits.size() != plan.origins.size()) {
    throw ContractError("blend: " + std::to_string(window_logits.size()) +
                        " window outputs for a plan of " + std::to_string(plan.origins.size()));
  }
  WindowBlender blender(plan, grid, weighting);
  for (std::size_t w = 0; w < window_logits.size(); ++w) blender.add(w, window_logits[w]);
  return blender.finish();
}

ScalarVolume extract_window(const ScalarVolume& vol, const WindowPlan& plan, const Index3& origin) {
  const Grid& g = vol.grid();
  Grid wg = g;
  wg.dims = plan.window_dims();
  Index3 shift{};
  for (int a = 0; a < 3; ++a) {
    shift[a] = origin[a] - plan.pad_lo[a];
    wg.origin[a] = g.origin[a] + static_cast<double>(shift[a]) * g.spacing[a];
  }
  std::vector<double> out(wg.voxel_count(), 0.0);
  for (std::int64_t z = 0; z < plan.window; ++z) {
    for (std::int64_t y = 0; y < plan.window; ++y) {
      for (std::int64_t x = 0; x < plan.window; ++x) {
        const std::int64_t sx = x + shift[0], sy = y + shift[1], sz = z + shift[2];
        if (g.contains(sx, sy, sz)) out[wg.index(x, y, z)] = vol.at(sx, sy, sz);
      }
    }
  }
  return ScalarVolume(wg, std::move(out), vol.kind());
}

ClassProbabilities sliding_window_inference(const ScalarVolume& pet, const ScalarVolume& ct,
                                            const WindowPlan& plan, const Predictor& predictor,
                                            BlendWeighting weighting) {
  require_same_lattice(pet.grid(), ct.grid(), "sliding_window_inference");
  WindowBlender blender(plan, pet.grid(), weighting);
  for (std::size_t w = 0; w < plan.origins.size(); ++w) {
    blender.add(w, predictor(extract_window(pet, plan, plan.origins[w]),
                             extract_window(ct, plan, plan.origins[w])));
  }
  return blender.finish();
}

Predictor constant_predictor(double background_logit, double foreground_logit) {
  return [=](const ScalarVolume& pet, const ScalarVolume&) {
    return ClassLogits{std::vector<double>(pet.size(), background_logit),
                       std::vector<double>(pet.size(), foreground_logit)};
  };
}

Predictor pet_threshold_predictor(double threshold, double sharpness) {
  return [=](const ScalarVolume& pet, const ScalarVolume&) {
    ClassLogits out{std::vector<double>(pet.size(), 0.0), std::vector<double>(pet.size())};
    for (std::size_t i = 0; i < pet.size(); ++i) out.foreground[i] = sharpness * (pet[i] - threshold);
    return out;
  };
}

ScalarVolume average_ensemble(std::span<const ScalarVolume> probs, AverageMode mode) {
  if (probs.empty()) throw DomainError("average_ensemble needs at least one volume");
  const Grid& g = probs.front().grid();
  for (const ScalarVolume& p : probs) {
    if (!(p.grid() == g)) throw ShapeError("average_ensemble: inputs are on different grids");
  }
  if (mode == AverageMode::kProbability) {
    std::vector<std::span<const double>> views;
    for (const ScalarVolume& p : probs) views.push_back(p.data());
    std::vector<double> mean = kernels::voxel_mean(views);
    for (double& v : mean) v = std::clamp(v, 0.0, 1.0);
    return ScalarVolume(g, std::move(mean), VolumeKind::kProb);
  }
  constexpr double kEps = 1e-12;
  std::vector<std::vector<double>> logits;
  std::vector<std::span<const double>> views;
  logits.reserve(probs.size());
  for (const ScalarVolume& p : probs) {
    std::vector<double> l(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double q = std::clamp(p[i], kEps, 1.0 - kEps);
      l[i] = std::log(q / (1.0 - q));
    }
    logits.push_back(std::move(l));
    views.push_back(logits.back());
  }
  std::vector<double> mean = kernels::voxel_mean(views);
  for (double& v : mean) v = sigmoid(v);
  return ScalarVolume(g, std::move(mean), VolumeKind::kProb);
}

BinaryMask binarize(const ScalarVolume& prob, double threshold) {
  std::vector<std::uint8_t> out(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = prob[i] > threshold ? 1 : 0;
  return BinaryMask(prob.grid(), std::move(out));
}

BinaryMask resample_to_reference(const BinaryMask& mask, const Grid& reference) {
  reference.validate();
  return BinaryMask(reference, kernels::resample_nearest<std::uint8_t>(
                                   mask.grid(), mask.data(), reference,
                                   kernels::OutOfBounds::kZero));
}

}  // namespace petseg
