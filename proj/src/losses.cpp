#include "petseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "petseg/error.hpp"

namespace petseg {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::fabs(x))));
}

struct ClassWeights {
  std::array<double, 2> w{0.0, 0.0};
};

ClassWeights class_weights(const PatchBatch& b, std::size_t i) {
  std::array<double, 2> count{0.0, 0.0};
  for (int l = 0; l < 2; ++l) {
    for (std::size_t j = 0; j < b.voxels(); ++j) count[l] += b.target(i, l, j);
  }
  ClassWeights cw;
  double largest = 0.0;
  for (int l = 0; l < 2; ++l) {
    if (count[l] > 0) {
      cw.w[l] = 1.0 / (count[l] * count[l]);
      largest = std::max(largest, cw.w[l]);
    }
  }
  for (int l = 0; l < 2; ++l) {
    if (count[l] == 0) cw.w[l] = largest;
  }
  return cw;
}

// Softmax probability of class `cls` at (i, j).
double softmax_prob(const PatchBatch& b, std::size_t i, int cls, std::size_t j) {
  return sigmoid(b.logit(i, cls, j) - b.logit(i, 1 - cls, j));
}

struct DiceTerms {
  double numerator = 0.0;
  double denominator = 0.0;
  ClassWeights weights;
};

DiceTerms dice_terms(const PatchBatch& b, std::size_t i, const LossConfig& cfg) {
  DiceTerms t;
  t.weights = class_weights(b, i);
  double inter = 0.0, total = 0.0;
  for (int l = 0; l < 2; ++l) {
    double pg = 0.0, ps = 0.0;
    for (std::size_t j = 0; j < b.voxels(); ++j) {
      const double p = softmax_prob(b, i, l, j);
      const double g = b.target(i, l, j);
      pg += p * g;
      ps += p + g;
    }
    inter += t.weights.w[l] * pg;
    total += t.weights.w[l] * ps;
  }
  t.numerator = cfg.dice_numerator_factor * inter + cfg.epsilon;
  t.denominator = total + cfg.eta;
  return t;
}

// Per-patch partial results are computed in parallel and reduced in patch order.
template <typename PerPatch>
double patch_mean(std::size_t patches, PerPatch&& f) {
  std::vector<double> part(patches);
  const auto n = static_cast<std::int64_t>(patches);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) part[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  return std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(patches);
}

}  // namespace

void LossConfig::validate() const {
  if (!(epsilon > 0.0) || !(eta > 0.0)) throw DomainError("epsilon and eta must be > 0");
  if (!(gamma >= 0.0)) throw DomainError("focal gamma must be >= 0");
  if (!(focal_weights[0] > 0.0) || !(focal_weights[1] > 0.0)) {
    throw DomainError("focal class weights must be > 0");
  }
  if (!(log_floor > 0.0)) throw DomainError("log floor must be > 0");
}

PatchBatch::PatchBatch(std::size_t patches, std::size_t voxels, std::vector<double> logits,
                       std::vector<std::uint8_t> targets)
    : patches_(patches), voxels_(voxels), logits_(std::move(logits)), targets_(std::move(targets)) {
  if (patches_ == 0 || voxels_ == 0) throw DomainError("a batch needs >= 1 patch and >= 1 voxel");
  const std::size_t n = patches_ * 2 * voxels_;
  if (logits_.size() != n || targets_.size() != n) {
    throw ShapeError("batch buffers must hold patches * 2 * voxels = " + std::to_string(n) +
                     " values");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(logits_[k])) {
      throw DataError("non-finite logit at flat index " + std::to_string(k));
    }
  }
  for (std::size_t i = 0; i < patches_; ++i) {
    for (std::size_t j = 0; j < voxels_; ++j) {
      const unsigned g0 = target(i, 0, j), g1 = target(i, 1, j);
      if (g0 > 1 || g1 > 1 || g0 + g1 != 1) {
        throw DataError("targets at patch " + std::to_string(i) + " voxel " + std::to_string(j) +
                        " are not one-hot");
      }
    }
  }
}

PatchBatch PatchBatch::from_foreground(std::size_t patches, std::size_t voxels,
                                       std::vector<double> logits,
                                       std::span<const std::uint8_t> foreground) {
  if (foreground.size() != patches * voxels) {
    throw ShapeError("foreground mask must hold patches * voxels values");
  }
  std::vector<std::uint8_t> targets(patches * 2 * voxels);
  for (std::size_t i = 0; i < patches; ++i) {
    for (std::size_t j = 0; j < voxels; ++j) {
      const std::uint8_t fg = foreground[i * voxels + j] != 0;
      targets[(i * 2 + 0) * voxels + j] = static_cast<std::uint8_t>(1 - fg);
      targets[(i * 2 + 1) * voxels + j] = fg;
    }
  }
  return PatchBatch(patches, voxels, std::move(logits), std::move(targets));
}

PatchBatch PatchBatch::with_logits(std::vector<double> logits) const {
  return PatchBatch(patches_, voxels_, std::move(logits), targets_);
}

double generalized_dice_loss(const PatchBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  const double mean_ratio = patch_mean(batch.patches(), [&](std::size_t i) {
    const DiceTerms t = dice_terms(batch, i, cfg);
    return t.numerator / t.denominator;
  });
  return 1.0 - mean_ratio;
}

double focal_loss(const PatchBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  const double log_floor = std::log(cfg.log_floor);
  const double mean = patch_mean(batch.patches(), [&](std::size_t i) {
    double s = 0.0;
    for (int l = 0; l < 2; ++l) {
      for (std::size_t j = 0; j < batch.voxels(); ++j) {
        if (batch.target(i, l, j) == 0) continue;
        const double z = batch.logit(i, l, j);
        const double log_s = std::max(log_sigmoid(z), log_floor);
        s += cfg.focal_weights[l] * std::pow(sigmoid(-z), cfg.gamma) * log_s;
      }
    }
    return s;
  });
  return -mean;
}

double gdfl(const PatchBatch& batch, const LossConfig& cfg) {
  return generalized_dice_loss(batch, cfg) + focal_loss(batch, cfg);
}

std::vector<double> generalized_dice_gradient(const PatchBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  std::vector<double> grad(batch.logits().size(), 0.0);
  const double scale = -1.0 / static_cast<double>(batch.patches());
  const auto n = static_cast<std::int64_t>(batch.patches());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const DiceTerms t = dice_terms(batch, i, cfg);
    const double ratio = t.numerator / t.denominator;
    const double k = cfg.dice_numerator_factor;
    for (std::size_t j = 0; j < batch.voxels(); ++j) {
      // dR/dp_l = w_l (k g_l - R) / D
      const double dp1 = t.weights.w[1] * (k * batch.target(i, 1, j) - ratio) / t.denominator;
      const double dp0 = t.weights.w[0] * (k * batch.target(i, 0, j) - ratio) / t.denominator;
      const double p1 = softmax_prob(batch, i, 1, j);
      const double p0 = softmax_prob(batch, i, 0, j);
      // Two-class softmax: dp1/dz1 = p0 p1 = -dp1/dz0, and p0 = 1 - p1.
      const double dz1 = p0 * p1 * (dp1 - dp0);
      grad[batch.index(i, 1, j)] = scale * dz1;
      grad[batch.index(i, 0, j)] = -scale * dz1;
    }
  }
  return grad;
}

std::vector<double> focal_gradient(const PatchBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  const double log_floor = std::log(cfg.log_floor);
  std::vector<double> grad(batch.logits().size(), 0.0);
  const double scale = -1.0 / static_cast<double>(batch.patches());
  const double gamma = cfg.gamma;
  const auto total = static_cast<std::int64_t>(batch.logits().size());
#pragma omp parallel for schedule(static)
  for (std::int64_t kk = 0; kk < total; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    if (batch.targets()[k] == 0) continue;
    const int l = static_cast<int>((k / batch.voxels()) % 2);
    const double z = batch.logits()[k];
    const double s = sigmoid(z);
    const double q = sigmoid(-z);  // 1 - s
    const double raw_log = log_sigmoid(z);
    // d/dz [(1-s)^g log s] = -g s (1-s)^g log s + (1-s)^(g+1); the second term
    // vanishes where the log is floored.
    double d;
    if (raw_log >= log_floor) {
      d = -gamma * s * std::pow(q, gamma) * raw_log + std::pow(q, gamma + 1.0);
    } else {
      d = -gamma * s * std::pow(q, gamma) * log_floor;
    }
    grad[k] = scale * cfg.focal_weights[l] * d;
  }
  return grad;
}

std::vector<double> gdfl_gradient(const PatchBatch& batch, const LossConfig& cfg) {
  std::vector<double> g = generalized_dice_gradient(batch, cfg);
  const std::vector<double> f = focal_gradient(batch, cfg);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += f[k];
  return g;
}

}  // namespace petseg
