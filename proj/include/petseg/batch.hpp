#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "petseg/augment.hpp"
#include "petseg/metrics.hpp"
#include "petseg/preprocess.hpp"

namespace petseg {

// One manifest row. Relative paths are resolved against the directories
// passed to read_manifest.
struct CaseEntry {
  std::string case_id;
  Tracer tracer = Tracer::kUnknown;
  std::optional<int> fold;
  std::filesystem::path gt_path;
  std::filesystem::path pred_path;
  std::optional<std::filesystem::path> pet_path;
  std::optional<SuvParams> suv;
};

inline constexpr int kFoldCount = 5;

// CSV with a header. Required: case_id. Optional: tracer, fold (0..4), gt_path,
// pred_path (default "<case_id>.nii.gz"), pet_path, and the SUV columns
// dose_bq, decay_min, half_life_min, weight_kg. Duplicate ids, folds outside
// 0..4 and unreadable rows throw FormatError.
std::vector<CaseEntry> parse_manifest(std::string_view text, const std::filesystem::path& gt_dir,
                                      const std::filesystem::path& pred_dir);
std::vector<CaseEntry> read_manifest(const std::filesystem::path& path,
                                     const std::optional<std::filesystem::path>& gt_dir = {},
                                     const std::optional<std::filesystem::path>& pred_dir = {});

struct EvaluateOptions {
  MetricOptions metrics;
  int jobs = 0;  // 0: all available threads
};

struct CaseFailure {
  std::string case_id;
  std::string message;
};

struct EvaluateResult {
  std::vector<CaseMetrics> metrics;   // sorted by case_id
  std::vector<CaseFailure> failures;  // sorted by case_id

  bool ok() const { return failures.empty(); }
};

// Case-level worker pool. Failures are recorded and the run continues.
EvaluateResult run_evaluate(std::span<const CaseEntry> cases, const EvaluateOptions& opts = {});

// Writes metrics.csv and report.json into out_dir.
void write_evaluation(const EvaluateResult& result, const std::filesystem::path& out_dir,
                      GroupBy group_by = GroupBy::kBoth, std::size_t bins = 20);

struct PipelineOptions {
  Vec3 target_spacing{2.0, 2.0, 2.0};
  BodyThresholds thresholds;
  bool crop = true;
};

struct PipelineOutput {
  ScalarVolume pet;  // PET_SUV
  ScalarVolume ct;   // CT_NORM
  std::optional<BinaryMask> mask;
  Box crop_box;
  nlohmann::json params;
};

// CT is first brought onto the PET lattice when they differ. Then: SUV
// conversion, CT clip/normalize, body crop, resampling to the target spacing
// (trilinear for images, nearest for the mask).
PipelineOutput run_pipeline(const ScalarVolume& pet_bqml, const ScalarVolume& ct_hu,
                            const std::optional<BinaryMask>& mask, const SuvParams& suv,
                            const PipelineOptions& opts = {});

// pet_suv.nii.gz, ct_norm.nii.gz, mask.nii.gz (if any) and preprocess.json.
void write_pipeline(const PipelineOutput& out, const std::filesystem::path& out_dir);

// Reads metrics.csv and returns per-tracer histograms; unknown tracers are
// reported through `warnings`.
nlohmann::json emit_histograms(const std::filesystem::path& metrics_csv, std::size_t bins,
                               std::vector<std::string>* warnings = nullptr);

// Writes patch_<k>_pet.nii.gz, patch_<k>_ct.nii.gz, patch_<k>_mask.nii.gz and
// manifest.json listing every draw.
void write_augmented(std::span<const AugmentSample> samples, const AugmentConfig& cfg,
                     const std::filesystem::path& out_dir);

nlohmann::json augment_draw_json(const AugmentDraw& d);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace petseg
