#include "petseg/batch.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <omp.h>

#include "petseg/error.hpp"
#include "petseg/nifti.hpp"
#include "petseg/report.hpp"

namespace petseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cell(const CsvTable& t, const std::vector<std::string>& row, std::string_view name) {
  const int c = t.column(name);
  if (c < 0) return {};
  const std::string& v = row[static_cast<std::size_t>(c)];
  const auto b = v.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return v.substr(b, v.find_last_not_of(" \t") - b + 1);
}

double number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError(what + ": not a number: '" + text + "'");
  }
  return v;
}

fs::path resolve(const fs::path& dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || dir.empty() ? path : dir / path;
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json idx_json(const Index3& v) { return json::array({v[0], v[1], v[2]}); }

json grid_json(const Grid& g) {
  return {{"dims", idx_json(g.dims)}, {"spacing", vec_json(g.spacing)}, {"origin", vec_json(g.origin)}};
}

}  // namespace

std::vector<CaseEntry> parse_manifest(std::string_view text, const fs::path& gt_dir,
                                      const fs::path& pred_dir) {
  const CsvTable t = parse_csv(text);
  if (t.column("case_id") < 0) throw FormatError("manifest: missing case_id column");
  static constexpr std::string_view kSuvCols[] = {"dose_bq", "decay_min", "weight_kg"};
  std::vector<CaseEntry> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = "manifest row " + std::to_string(r + 1);
    CaseEntry e;
    e.case_id = cell(t, row, "case_id");
    if (e.case_id.empty()) throw FormatError(where + ": empty case_id");
    if (!seen.insert(e.case_id).second) {
      throw FormatError(where + ": duplicate case_id '" + e.case_id + "'");
    }
    const std::string tracer = cell(t, row, "tracer");
    if (!tracer.empty()) e.tracer = parse_tracer(tracer);
    const std::string fold = cell(t, row, "fold");
    if (!fold.empty()) {
      int f = -1;
      const auto [ptr, ec] = std::from_chars(fold.data(), fold.data() + fold.size(), f);
      if (ec != std::errc() || ptr != fold.data() + fold.size() || f < 0 || f >= kFoldCount) {
        throw FormatError(where + ": fold must be 0.." + std::to_string(kFoldCount - 1) +
                          ", got '" + fold + "'");
      }
      e.fold = f;
    }
    std::string gt = cell(t, row, "gt_path");
    std::string pred = cell(t, row, "pred_path");
    if (gt.empty()) gt = e.case_id + ".nii.gz";
    if (pred.empty()) pred = e.case_id + ".nii.gz";
    e.gt_path = resolve(gt_dir, gt);
    e.pred_path = resolve(pred_dir, pred);
    if (const std::string pet = cell(t, row, "pet_path"); !pet.empty()) {
      e.pet_path = resolve(gt_dir, pet);
    }
    int present = 0;
    for (auto c : kSuvCols) present += cell(t, row, c).empty() ? 0 : 1;
    if (present == 3) {
      SuvParams s;
      s.injected_dose_bq = number(cell(t, row, "dose_bq"), where + " dose_bq");
      s.decay_interval_min = number(cell(t, row, "decay_min"), where + " decay_min");
      s.patient_weight_kg = number(cell(t, row, "weight_kg"), where + " weight_kg");
      if (const std::string hl = cell(t, row, "half_life_min"); !hl.empty()) {
        s.half_life_min = number(hl, where + " half_life_min");
      }
      try {
        s.validate();
      } catch (const DomainError& err) {
        throw FormatError(where + ": " + err.what());
      }
      e.suv = s;
    } else if (present != 0) {
      throw FormatError(where + ": SUV columns dose_bq, decay_min, weight_kg must be given together");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CaseEntry> read_manifest(const fs::path& path, const std::optional<fs::path>& gt_dir,
                                     const std::optional<fs::path>& pred_dir) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path base = path.parent_path();
  try {
    return parse_manifest(ss.str(), gt_dir.value_or(base), pred_dir.value_or(base));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

EvaluateResult run_evaluate(std::span<const CaseEntry> cases, const EvaluateOptions& opts) {
  if (opts.jobs < 0) throw DomainError("jobs must be >= 0");
  const int jobs = opts.jobs == 0 ? omp_get_max_threads() : opts.jobs;
  std::vector<std::optional<CaseMetrics>> done(cases.size());
  std::vector<std::string> errors(cases.size());
  const auto n = static_cast<std::int64_t>(cases.size());
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const CaseEntry& c = cases[static_cast<std::size_t>(i)];
    try {
      CaseMetrics m = evaluate_case(c.gt_path, c.pred_path, c.tracer, opts.metrics);
      m.case_id = c.case_id;
      m.fold = c.fold;
      done[static_cast<std::size_t>(i)] = std::move(m);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  EvaluateResult r;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (done[i]) {
      r.metrics.push_back(std::move(*done[i]));
    } else {
      r.failures.push_back({cases[i].case_id, errors[i]});
    }
  }
  std::sort(r.metrics.begin(), r.metrics.end(),
            [](const CaseMetrics& a, const CaseMetrics& b) { return a.case_id < b.case_id; });
  std::sort(r.failures.begin(), r.failures.end(),
            [](const CaseFailure& a, const CaseFailure& b) { return a.case_id < b.case_id; });
  return r;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_evaluation(const EvaluateResult& result, const fs::path& out_dir, GroupBy group_by,
                      std::size_t bins) {
  fs::create_directories(out_dir);
  write_metrics_csv(result.metrics, out_dir / "metrics.csv");
  json report = result.metrics.empty() ? json{{"n_cases", 0}} : build_report(result.metrics, group_by, bins);
  json failures = json::array();
  for (const auto& f : result.failures) failures.push_back({{"case_id", f.case_id}, {"error", f.message}});
  report["failures"] = std::move(failures);
  write_json(report, out_dir / "report.json");
}

PipelineOutput run_pipeline(const ScalarVolume& pet_bqml, const ScalarVolume& ct_hu,
                            const std::optional<BinaryMask>& mask, const SuvParams& suv,
                            const PipelineOptions& opts) {
  const Grid& pet_grid = pet_bqml.grid();
  json params;
  params["input"] = {{"pet", grid_json(pet_grid)}, {"ct", grid_json(ct_hu.grid())}};
  params["steps"] = json::array();

  ScalarVolume ct = ct_hu;
  if (!(ct_hu.grid() == pet_grid)) {
    ct = resample_to_grid(ct_hu, pet_grid, Interpolation::kTrilinear, kernels::OutOfBounds::kClamp);
    params["steps"].push_back({{"op", "ct_to_pet_grid"}, {"interpolation", "trilinear"}});
  }
  std::optional<BinaryMask> m = mask;
  if (m && !(m->grid() == pet_grid)) {
    m = resample_to_grid(*m, pet_grid, kernels::OutOfBounds::kZero);
    params["steps"].push_back({{"op", "mask_to_pet_grid"}, {"interpolation", "nearest"}});
  }

  ScalarVolume pet = bq_to_suv(pet_bqml, suv);
  params["steps"].push_back({{"op", "suv"},
                             {"injected_dose_bq", suv.injected_dose_bq},
                             {"decay_interval_min", suv.decay_interval_min},
                             {"half_life_min", suv.half_life_min},
                             {"patient_weight_kg", suv.patient_weight_kg},
                             {"suv_factor", suv.suv_factor()}});

  ScalarVolume ct_norm = clip_normalize_ct(ct);
  params["steps"].push_back(
      {{"op", "ct_clip_normalize"}, {"clip_hu", json::array({kCtClipLowHu, kCtClipHighHu})}});

  Box box = full_box(pet_grid);
  if (opts.crop) box = body_bounding_box(ct, pet, opts.thresholds);
  pet = crop_to_box(pet, box);
  ct_norm = crop_to_box(ct_norm, box);
  if (m) m = crop_to_box(*m, box);
  params["steps"].push_back({{"op", "body_crop"},
                             {"enabled", opts.crop},
                             {"ct_hu_threshold", opts.thresholds.ct_hu},
                             {"suv_threshold", opts.thresholds.suv},
                             {"box_lo", idx_json(box.lo)},
                             {"box_hi", idx_json(box.hi)}});

  pet = resample(pet, ResampleSpec{opts.target_spacing, Interpolation::kTrilinear});
  ct_norm = resample(ct_norm, ResampleSpec{opts.target_spacing, Interpolation::kTrilinear});
  if (m) m = resample(*m, opts.target_spacing);
  params["steps"].push_back({{"op", "resample"},
                             {"target_spacing", vec_json(opts.target_spacing)},
                             {"images", "trilinear"},
                             {"mask", "nearest"},
                             {"boundary", "clamp"}});
  params["output"] = grid_json(pet.grid());
  params["has_mask"] = m.has_value();
  if (m) params["mask_foreground_voxels"] = m->foreground_count();

  return PipelineOutput{std::move(pet), std::move(ct_norm), std::move(m), box, std::move(params)};
}

void write_pipeline(const PipelineOutput& out, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_nifti(out.pet, out_dir / "pet_suv.nii.gz");
  write_nifti(out.ct, out_dir / "ct_norm.nii.gz");
  if (out.mask) write_nifti(*out.mask, out_dir / "mask.nii.gz");
  write_json(out.params, out_dir / "preprocess.json");
}

json emit_histograms(const fs::path& metrics_csv, std::size_t bins,
                     std::vector<std::string>* warnings) {
  const auto records = read_metrics_csv(metrics_csv, warnings);
  json out = metric_histograms(records, bins);
  out["bins"] = bins;
  out["n_cases"] = records.size();
  return out;
}

json augment_draw_json(const AugmentDraw& d) {
  return {{"call_index", d.call_index},
          {"patch", {{"size", d.patch.size}, {"pad_lo", idx_json(d.patch.pad_lo)}, {"offset", idx_json(d.patch.offset)}}},
          {"affine",
           {{"translation", vec_json(d.affine.translation)},
            {"rotation", d.affine.rotation},
            {"scale", d.affine.scale}}},
          {"elastic_sigma", d.elastic_sigma},
          {"gamma_pet", d.gamma_pet},
          {"gamma_ct", d.gamma_ct}};
}

void write_augmented(std::span<const AugmentSample> samples, const AugmentConfig& cfg,
                     const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json draws = json::array();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const std::string stem = "patch_" + std::to_string(k);
    write_nifti(s.pet, out_dir / (stem + "_pet.nii.gz"));
    write_nifti(s.ct, out_dir / (stem + "_ct.nii.gz"));
    if (s.mask) write_nifti(*s.mask, out_dir / (stem + "_mask.nii.gz"));
    draws.push_back(augment_draw_json(s.draw));
  }
  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["config"] = {{"patch_size", cfg.patch_size},
                        {"translate_range", cfg.translate_range},
                        {"signed_translation", cfg.signed_translation},
                        {"rotation_range", cfg.rotation_range},
                        {"scale_factor_max", cfg.scale_factor_max},
                        {"elastic_sigma_range", cfg.elastic_sigma_range},
                        {"elastic_offset_range", cfg.elastic_offset_range},
                        {"elastic_pitch", cfg.elastic_pitch},
                        {"gamma_range", cfg.gamma_range},
                        {"noise_mu", cfg.noise_mu},
                        {"noise_sigma", cfg.noise_sigma}};
  manifest["samples"] = std::move(draws);
  write_json(manifest, out_dir / "manifest.json");
}

}  // namespace petseg
