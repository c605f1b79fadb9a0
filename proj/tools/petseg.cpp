// petseg command-line front end.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "petseg/augment.hpp"
#include "petseg/batch.hpp"
#include "petseg/components.hpp"
#include "petseg/ensemble.hpp"
#include "petseg/error.hpp"
#include "petseg/lesions.hpp"
#include "petseg/losses.hpp"
#include "petseg/metrics.hpp"
#include "petseg/nifti.hpp"
#include "petseg/preprocess.hpp"
#include "petseg/ranking.hpp"
#include "petseg/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace petseg;

namespace {

constexpr int kExitCaseFailures = 1;
constexpr int kExitError = 2;

// JSON config: top-level objects are subcommands, leaves are long flag names.
//   {"evaluate": {"manifest": "cases.csv", "jobs": 4}}
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConversionError("writing JSON config is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> out;
    collect(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v, const std::string& name) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config value for '" + name + "' must be a scalar or array");
  }

  static void collect(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        collect(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v, it.key()));
      } else {
        item.inputs.push_back(scalar(*it, it.key()));
      }
      out.push_back(std::move(item));
    }
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

Connectivity conn_of(int n) { return connectivity_from_int(n); }

// ---- preprocess

struct PreprocessArgs {
  std::string pet, ct, mask, out;
  double dose = 0.0, decay = 0.0, half_life = kHalfLifeF18Min, weight = 0.0;
  std::vector<double> spacing{2.0, 2.0, 2.0};
  double ct_threshold = -800.0, suv_threshold = 0.1;
  bool no_crop = false;
};

void add_preprocess(CLI::App& app) {
  auto a = std::make_shared<PreprocessArgs>();
  auto* sub = app.add_subcommand("preprocess", "SUV conversion, CT normalization, body crop, resampling");
  sub->add_option("--pet", a->pet, "PET image in Bq/ml")->required();
  sub->add_option("--ct", a->ct, "CT image in HU")->required();
  sub->add_option("--mask", a->mask, "Optional lesion mask on the PET lattice");
  sub->add_option("--dose-bq", a->dose, "Injected activity (Bq)")->required();
  sub->add_option("--decay-min", a->decay, "Minutes from injection to scan start")->required();
  sub->add_option("--half-life-min", a->half_life, "Tracer half-life (min)")->capture_default_str();
  sub->add_option("--weight-kg", a->weight, "Patient weight (kg)")->required();
  sub->add_option("--spacing", a->spacing, "Target spacing in mm")->expected(3)->capture_default_str();
  sub->add_option("--ct-threshold", a->ct_threshold, "Body threshold on CT (HU)")->capture_default_str();
  sub->add_option("--suv-threshold", a->suv_threshold, "Body threshold on SUV")->capture_default_str();
  sub->add_flag("--no-crop", a->no_crop, "Skip the body crop");
  sub->add_option("--out", a->out, "Output directory")->required();
  sub->callback([a] {
    const ScalarVolume pet = read_nifti(a->pet, VolumeKind::kPetBqml);
    const ScalarVolume ct = read_nifti(a->ct, VolumeKind::kCtHu);
    std::optional<BinaryMask> mask;
    if (!a->mask.empty()) mask = read_nifti_mask(a->mask);
    SuvParams suv{a->dose, a->decay, a->half_life, a->weight};
    PipelineOptions opts;
    opts.target_spacing = {a->spacing[0], a->spacing[1], a->spacing[2]};
    opts.thresholds = {a->ct_threshold, a->suv_threshold};
    opts.crop = !a->no_crop;
    const PipelineOutput out = run_pipeline(pet, ct, mask, suv, opts);
    write_pipeline(out, a->out);
    print_json(out.params);
  });
}

// ---- augment

struct AugmentArgs {
  std::string pet, ct, mask, out;
  std::uint64_t seed = 0;
  std::uint64_t count = 1;
  std::uint64_t start = 0;
  AugmentConfig cfg;
  std::vector<double> translate{0.0, 10.0}, rotation, sigma{0.0, 1.0}, offset{0.0, 1.0}, gamma{0.7, 1.5};
};

void add_augment(CLI::App& app) {
  auto a = std::make_shared<AugmentArgs>();
  a->rotation = {a->cfg.rotation_range[0], a->cfg.rotation_range[1]};
  auto* sub = app.add_subcommand("augment", "Random patches with affine, elastic, gamma and noise transforms");
  sub->add_option("--pet", a->pet, "PET image (SUV)")->required();
  sub->add_option("--ct", a->ct, "CT image (normalized)")->required();
  sub->add_option("--mask", a->mask, "Optional mask, transformed geometrically only");
  sub->add_option("--seed", a->seed, "Random seed (required)")->required();
  sub->add_option("--count", a->count, "Number of samples")->capture_default_str();
  sub->add_option("--start-index", a->start, "Call index of the first sample")->capture_default_str();
  sub->add_option("--patch-size", a->cfg.patch_size, "Cubic patch edge (voxels)")->capture_default_str();
  sub->add_option("--translate-range", a->translate, "Translation range (voxels)")->expected(2);
  sub->add_flag("--signed-translation", a->cfg.signed_translation, "Translate in either direction");
  sub->add_option("--rotation-range", a->rotation, "Rotation range about z (radians)")->expected(2);
  sub->add_option("--scale-max", a->cfg.scale_factor_max, "Scale drawn from [1/max, max]")->capture_default_str();
  sub->add_option("--elastic-sigma-range", a->sigma, "Elastic smoothing sigma (control cells)")->expected(2);
  sub->add_option("--elastic-offset-range", a->offset, "Control point offsets (voxels)")->expected(2);
  sub->add_option("--elastic-pitch", a->cfg.elastic_pitch, "Control point spacing (voxels)")->capture_default_str();
  sub->add_option("--gamma-range", a->gamma, "Gamma exponent range")->expected(2);
  sub->add_option("--noise-mu", a->cfg.noise_mu, "Noise mean")->capture_default_str();
  sub->add_option("--noise-sigma", a->cfg.noise_sigma, "Noise standard deviation")->capture_default_str();
  sub->add_option("--out", a->out, "Output directory")->required();
  sub->callback([a] {
    AugmentConfig cfg = a->cfg;
    cfg.seed = a->seed;
    cfg.translate_range = {a->translate[0], a->translate[1]};
    cfg.rotation_range = {a->rotation[0], a->rotation[1]};
    cfg.elastic_sigma_range = {a->sigma[0], a->sigma[1]};
    cfg.elastic_offset_range = {a->offset[0], a->offset[1]};
    cfg.gamma_range = {a->gamma[0], a->gamma[1]};
    cfg.validate();
    const ScalarVolume pet = read_nifti(a->pet, VolumeKind::kPetSuv);
    const ScalarVolume ct = read_nifti(a->ct, VolumeKind::kCtNorm);
    std::optional<BinaryMask> mask;
    if (!a->mask.empty()) mask = read_nifti_mask(a->mask);
    std::vector<AugmentSample> samples;
    for (std::uint64_t k = 0; k < a->count; ++k) {
      samples.push_back(augment_case(pet, ct, mask, cfg, a->start + k));
    }
    write_augmented(samples, cfg, a->out);
    std::cout << "wrote " << samples.size() << " samples to " << a->out << '\n';
  });
}

// ---- loss

struct LossArgs {
  std::vector<std::string> pred, target, pred_bg;
  bool as_logits = false;
  LossConfig cfg;
  std::vector<double> weights{1.0, 100.0};
  std::string grad_out;
};

void add_loss(CLI::App& app) {
  auto a = std::make_shared<LossArgs>();
  auto* sub = app.add_subcommand("loss", "Generalized Dice + focal loss for prediction/target patches");
  sub->add_option("--pred", a->pred, "Foreground probability (or logit with --as-logits), one per patch")
      ->required();
  sub->add_option("--target", a->target, "Binary target mask, one per patch")->required();
  sub->add_flag("--as-logits", a->as_logits, "Predictions are foreground logits");
  sub->add_option("--pred-bg", a->pred_bg, "Background logits (with --as-logits; default 0)");
  sub->add_option("--epsilon", a->cfg.epsilon, "Dice numerator smoothing")->capture_default_str();
  sub->add_option("--eta", a->cfg.eta, "Dice denominator smoothing")->capture_default_str();
  sub->add_option("--focal-weights", a->weights, "Focal class weights (background foreground)")->expected(2);
  sub->add_option("--gamma", a->cfg.gamma, "Focal exponent")->capture_default_str();
  sub->add_option("--dice-numerator-factor", a->cfg.dice_numerator_factor,
                  "Multiplier on the Dice numerator (1 or 2)")
      ->capture_default_str();
  sub->add_option("--grad-out", a->grad_out, "Write the GDFL gradient as JSON");
  sub->callback([a] {
    if (a->pred.size() != a->target.size()) throw ContractError("--pred and --target counts differ");
    if (!a->pred_bg.empty() && (!a->as_logits || a->pred_bg.size() != a->pred.size())) {
      throw ContractError("--pred-bg needs --as-logits and one file per --pred");
    }
    LossConfig cfg = a->cfg;
    cfg.focal_weights = {a->weights[0], a->weights[1]};
    cfg.validate();
    std::size_t voxels = 0;
    std::vector<double> logits;
    std::vector<std::uint8_t> fg;
    for (std::size_t p = 0; p < a->pred.size(); ++p) {
      const ScalarVolume pred = read_nifti(a->pred[p]);
      const BinaryMask target = read_nifti_mask(a->target[p]);
      if (pred.dims() != target.dims()) throw ShapeError(a->pred[p] + ": dims differ from target");
      if (p == 0) voxels = pred.size();
      if (pred.size() != voxels) throw ShapeError("all patches must have the same voxel count");
      std::vector<double> bg(voxels, 0.0), fgl(voxels, 0.0);
      if (a->as_logits) {
        std::copy(pred.data().begin(), pred.data().end(), fgl.begin());
        if (!a->pred_bg.empty()) {
          const ScalarVolume b = read_nifti(a->pred_bg[p]);
          if (b.size() != voxels) throw ShapeError(a->pred_bg[p] + ": voxel count differs");
          std::copy(b.data().begin(), b.data().end(), bg.begin());
        }
      } else {
        // Split logit(q) symmetrically so the two-class softmax returns q.
        for (std::size_t i = 0; i < voxels; ++i) {
          const double q = std::clamp(pred[i], 1e-12, 1.0 - 1e-12);
          const double z = std::log(q) - std::log1p(-q);
          bg[i] = -0.5 * z;
          fgl[i] = 0.5 * z;
        }
      }
      logits.insert(logits.end(), bg.begin(), bg.end());
      logits.insert(logits.end(), fgl.begin(), fgl.end());
      fg.insert(fg.end(), target.data().begin(), target.data().end());
    }
    const PatchBatch batch = PatchBatch::from_foreground(a->pred.size(), voxels, std::move(logits), fg);
    const double gdl = generalized_dice_loss(batch, cfg);
    const double fl = focal_loss(batch, cfg);
    print_json({{"patches", batch.patches()}, {"voxels", voxels}, {"gdl", gdl}, {"fl", fl}, {"gdfl", gdl + fl}});
    if (!a->grad_out.empty()) {
      write_json(json{{"layout", "patch,class,voxel"}, {"gradient", gdfl_gradient(batch, cfg)}}, a->grad_out);
    }
  });
}

// ---- components

struct ComponentsArgs {
  std::string mask, out;
  int connectivity = 6;
};

void add_components(CLI::App& app) {
  auto a = std::make_shared<ComponentsArgs>();
  auto* sub = app.add_subcommand("components", "Connected-component labeling of a mask");
  sub->add_option("--mask", a->mask, "Binary mask")->required();
  sub->add_option("--connectivity", a->connectivity, "6, 18 or 26")->capture_default_str();
  sub->add_option("--out", a->out, "Label map output (int32 NIfTI)");
  sub->callback([a] {
    const BinaryMask mask = read_nifti_mask(a->mask);
    const LabelMap labels = label_components(mask, conn_of(a->connectivity));
    if (!a->out.empty()) write_nifti(labels, a->out);
    const double vml = voxel_volume_ml(mask.spacing());
    json comps = json::array();
    const auto sizes = component_sizes(labels);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      comps.push_back({{"label", i + 1}, {"voxels", sizes[i]}, {"volume_ml", static_cast<double>(sizes[i]) * vml}});
    }
    print_json({{"connectivity", a->connectivity}, {"n_components", labels.n_components()}, {"components", comps}});
  });
}

// ---- evaluate

struct EvaluateArgs {
  std::string manifest, gt_dir, pred_dir, out, group_by = "both";
  int jobs = 0;
  int connectivity = 6;
  double both_empty = 1.0;
  std::size_t bins = 20;
};

int g_exit = 0;

void add_evaluate(CLI::App& app) {
  auto a = std::make_shared<EvaluateArgs>();
  auto* sub = app.add_subcommand("evaluate", "DSC, FPV and FNV for every case of a manifest");
  sub->add_option("--manifest", a->manifest, "CSV manifest")->required();
  sub->add_option("--gt-dir", a->gt_dir, "Base directory for ground-truth paths");
  sub->add_option("--pred-dir", a->pred_dir, "Base directory for prediction paths");
  sub->add_option("--out", a->out, "Output directory for metrics.csv and report.json")->required();
  sub->add_option("--jobs", a->jobs, "Worker threads (0 = all cores)")->capture_default_str();
  sub->add_option("--connectivity", a->connectivity, "6, 18 or 26")->capture_default_str();
  sub->add_option("--both-empty-dsc", a->both_empty, "DSC when both masks are empty")->capture_default_str();
  sub->add_option("--group-by", a->group_by, "fold, tracer, both or all")->capture_default_str();
  sub->add_option("--bins", a->bins, "Histogram bins")->capture_default_str();
  sub->callback([a] {
    std::optional<fs::path> gt, pred;
    if (!a->gt_dir.empty()) gt = a->gt_dir;
    if (!a->pred_dir.empty()) pred = a->pred_dir;
    const auto cases = read_manifest(a->manifest, gt, pred);
    EvaluateOptions opts;
    opts.jobs = a->jobs;
    opts.metrics.connectivity = conn_of(a->connectivity);
    opts.metrics.both_empty_dsc = a->both_empty;
    const EvaluateResult r = run_evaluate(cases, opts);
    write_evaluation(r, a->out, parse_group_by(a->group_by), a->bins);
    std::cout << "evaluated " << r.metrics.size() << " of " << cases.size() << " cases\n";
    for (const auto& f : r.failures) std::cerr << "case " << f.case_id << ": " << f.message << '\n';
    if (!r.ok()) g_exit = kExitCaseFailures;
  });
}

// ---- measures

struct MeasuresArgs {
  std::string mask, suv, manifest, gt_dir, out;
  int connectivity = 6;
  std::size_t bins = 20;
};

void add_measures(CLI::App& app) {
  auto a = std::make_shared<MeasuresArgs>();
  auto* sub = app.add_subcommand("measures", "Lesion MTV/SUV, patient TMTV/TLG, cohort distributions");
  sub->add_option("--mask", a->mask, "Lesion mask (single case)");
  sub->add_option("--suv", a->suv, "SUV image (single case)");
  sub->add_option("--manifest", a->manifest, "Cohort manifest: gt_path masks, pet_path images");
  sub->add_option("--gt-dir", a->gt_dir, "Base directory for manifest paths");
  sub->add_option("--connectivity", a->connectivity, "6, 18 or 26")->capture_default_str();
  sub->add_option("--bins", a->bins, "Histogram bins")->capture_default_str();
  sub->add_option("--out", a->out, "Lesion CSV (single case) or output directory (cohort)");
  sub->callback([a] {
    const Connectivity conn = conn_of(a->connectivity);
    if (a->manifest.empty()) {
      if (a->mask.empty() || a->suv.empty()) throw ContractError("measures needs --mask and --suv, or --manifest");
      const LesionReport rep =
          lesion_stats(read_nifti_mask(a->mask), read_nifti(a->suv, VolumeKind::kPetSuv), conn);
      if (!a->out.empty()) {
        std::ofstream(a->out, std::ios::binary) << lesion_csv(rep);
      }
      print_json({{"n_lesions", rep.n_lesions}, {"tmtv_ml", rep.tmtv_ml}, {"tlg_ml", rep.tlg_ml}});
      return;
    }
    if (a->out.empty()) throw ContractError("--manifest needs --out");
    std::optional<fs::path> base;
    if (!a->gt_dir.empty()) base = a->gt_dir;
    const auto cases = read_manifest(a->manifest, base, base);
    fs::create_directories(a->out);
    std::vector<LesionCase> cohort;
    for (const auto& c : cases) {
      if (!c.pet_path) throw FormatError("case " + c.case_id + ": pet_path is required for measures");
      ScalarVolume suv = c.suv ? bq_to_suv(read_nifti(*c.pet_path, VolumeKind::kPetBqml), *c.suv)
                               : read_nifti(*c.pet_path, VolumeKind::kPetSuv);
      LesionReport rep = lesion_stats(read_nifti_mask(c.gt_path), suv, conn);
      std::ofstream(fs::path(a->out) / (c.case_id + "_lesions.csv"), std::ios::binary) << lesion_csv(rep);
      cohort.push_back({c.case_id, c.tracer, std::move(rep)});
    }
    const json j = cohort_json(cohort_measures(cohort), a->bins);
    write_json(j, fs::path(a->out) / "cohort.json");
    std::cout << "measured " << cohort.size() << " cases\n";
  });
}

// ---- ensemble

std::string window_name(const Index3& idx) {
  return "w_" + std::to_string(idx[0]) + "_" + std::to_string(idx[1]) + "_" + std::to_string(idx[2]) + ".nii.gz";
}

json plan_json(const WindowPlan& p, const Grid& g) {
  json origins = json::array();
  for (std::size_t w = 0; w < p.origins.size(); ++w) {
    origins.push_back({{"index", p.indices[w]}, {"origin", p.origins[w]}, {"file", window_name(p.indices[w])}});
  }
  return {{"dims", p.dims},
          {"spacing", g.spacing},
          {"origin", g.origin},
          {"window", p.window},
          {"overlap", p.overlap},
          {"stride", p.stride},
          {"padded_dims", p.padded_dims},
          {"pad_lo", p.pad_lo},
          {"axis_origins", p.axis_origins},
          {"windows", origins}};
}

BlendWeighting parse_weighting(const std::string& s) {
  if (s == "uniform") return BlendWeighting::kUniform;
  if (s == "gaussian") return BlendWeighting::kGaussian;
  throw DomainError("unknown weighting '" + s + "' (uniform, gaussian)");
}

struct EnsembleArgs {
  // plan
  std::string reference, plan_out, export_dir, ct;
  std::int64_t window = 192;
  double overlap = 0.5;
  // blend
  std::string plan_in, windows_dir, weighting = "uniform", prob_out, bg_out;
  // average
  std::vector<std::string> inputs;
  std::string mode = "probability", avg_out;
  // binarize
  std::string bin_in, bin_out, bin_reference;
  double threshold = 0.5;
};

void add_ensemble(CLI::App& app) {
  auto a = std::make_shared<EnsembleArgs>();
  auto* ens = app.add_subcommand("ensemble", "Sliding-window planning, blending, averaging, thresholding");
  ens->require_subcommand(1);

  auto* plan = ens->add_subcommand("plan", "Tile a volume into overlapping windows");
  plan->add_option("--reference", a->reference, "Volume to tile")->required();
  plan->add_option("--window", a->window, "Window edge (voxels)")->capture_default_str();
  plan->add_option("--overlap", a->overlap, "Fractional overlap in [0, 1)")->capture_default_str();
  plan->add_option("--out", a->plan_out, "Plan JSON")->required();
  plan->add_option("--export-windows", a->export_dir, "Write each input window as in_<i>_<j>_<k>_pet.nii.gz");
  plan->add_option("--ct", a->ct, "CT volume exported alongside the PET windows");
  plan->callback([a] {
    const ScalarVolume ref = read_nifti(a->reference);
    const WindowPlan p = plan_windows(ref.dims(), a->window, a->overlap);
    write_json(plan_json(p, ref.grid()), a->plan_out);
    if (!a->export_dir.empty()) {
      fs::create_directories(a->export_dir);
      std::optional<ScalarVolume> ct;
      if (!a->ct.empty()) ct = read_nifti(a->ct);
      for (std::size_t w = 0; w < p.origins.size(); ++w) {
        const Index3& i = p.indices[w];
        const std::string stem = "in_" + std::to_string(i[0]) + "_" + std::to_string(i[1]) + "_" + std::to_string(i[2]);
        write_nifti(extract_window(ref, p, p.origins[w]), fs::path(a->export_dir) / (stem + "_pet.nii.gz"));
        if (ct) write_nifti(extract_window(*ct, p, p.origins[w]), fs::path(a->export_dir) / (stem + "_ct.nii.gz"));
      }
    }
    std::cout << p.origins.size() << " windows, stride " << p.stride << '\n';
  });

  auto* blend_cmd = ens->add_subcommand("blend", "Blend per-window logit margins into a probability map");
  blend_cmd->add_option("--plan", a->plan_in, "Plan JSON from 'ensemble plan'")->required();
  blend_cmd->add_option("--windows", a->windows_dir, "Directory of w_<i>_<j>_<k>.nii.gz foreground-minus-background logits")
      ->required();
  blend_cmd->add_option("--weighting", a->weighting, "uniform or gaussian")->capture_default_str();
  blend_cmd->add_option("--out", a->prob_out, "Foreground probability output")->required();
  blend_cmd->add_option("--background-out", a->bg_out, "Background probability output");
  blend_cmd->callback([a] {
    const json pj = json::parse(slurp(a->plan_in));
    Grid g;
    g.dims = pj.at("dims").get<Index3>();
    g.spacing = pj.at("spacing").get<Vec3>();
    g.origin = pj.at("origin").get<Vec3>();
    const WindowPlan p = plan_windows(g.dims, pj.at("window").get<std::int64_t>(), pj.at("overlap").get<double>());
    std::vector<ClassLogits> logits;
    logits.reserve(p.origins.size());
    for (const auto& idx : p.indices) {
      const fs::path f = fs::path(a->windows_dir) / window_name(idx);
      const ScalarVolume w = read_nifti(f);
      if (w.dims() != p.window_dims()) throw ShapeError(f.string() + ": window dims differ from plan");
      ClassLogits l;
      l.background.assign(w.size(), 0.0);
      l.foreground.assign(w.data().begin(), w.data().end());
      logits.push_back(std::move(l));
    }
    const ClassProbabilities probs = blend(p, logits, g, parse_weighting(a->weighting));
    write_nifti(probs.foreground, a->prob_out);
    if (!a->bg_out.empty()) write_nifti(probs.background, a->bg_out);
  });

  auto* avg = ens->add_subcommand("average", "Voxelwise mean of probability maps");
  avg->add_option("--inputs", a->inputs, "Probability maps")->required();
  avg->add_option("--mode", a->mode, "probability or logit")->capture_default_str();
  avg->add_option("--out", a->avg_out, "Averaged probability")->required();
  avg->callback([a] {
    std::vector<ScalarVolume> probs;
    for (const auto& f : a->inputs) probs.push_back(read_nifti(f, VolumeKind::kProb));
    AverageMode mode;
    if (a->mode == "probability") {
      mode = AverageMode::kProbability;
    } else if (a->mode == "logit") {
      mode = AverageMode::kLogit;
    } else {
      throw DomainError("unknown mode '" + a->mode + "' (probability, logit)");
    }
    write_nifti(average_ensemble(probs, mode), a->avg_out);
  });

  auto* bin = ens->add_subcommand("binarize", "Threshold a probability map (strictly greater)");
  bin->add_option("--input", a->bin_in, "Probability map")->required();
  bin->add_option("--threshold", a->threshold, "Threshold")->capture_default_str();
  bin->add_option("--reference", a->bin_reference, "Resample the mask onto this volume's lattice");
  bin->add_option("--out", a->bin_out, "Mask output")->required();
  bin->callback([a] {
    BinaryMask mask = binarize(read_nifti(a->bin_in, VolumeKind::kProb), a->threshold);
    if (!a->bin_reference.empty()) mask = resample_to_reference(mask, read_nifti(a->bin_reference).grid());
    write_nifti(mask, a->bin_out);
    std::cout << mask.foreground_count() << " foreground voxels\n";
  });
}

// ---- rank

struct RankArgs {
  std::string submissions, out, ties = "average";
};

void add_rank(CLI::App& app) {
  auto a = std::make_shared<RankArgs>();
  auto* sub = app.add_subcommand("rank", "Leaderboard ranking from mean DSC, FPV and FNV");
  sub->add_option("--submissions", a->submissions, "CSV with name, dsc, fpv_ml, fnv_ml")->required();
  sub->add_option("--ties", a->ties, "average or min")->capture_default_str();
  sub->add_option("--out", a->out, "Ranking CSV");
  sub->callback([a] {
    TieRule ties;
    if (a->ties == "average") {
      ties = TieRule::kAverage;
    } else if (a->ties == "min") {
      ties = TieRule::kMin;
    } else {
      throw DomainError("unknown tie rule '" + a->ties + "' (average, min)");
    }
    const auto subs = parse_submissions_csv(slurp(a->submissions));
    const auto ranked = rank_submissions(subs, ties);
    const std::string csv = ranking_csv(ranked);
    if (!a->out.empty()) std::ofstream(a->out, std::ios::binary) << csv;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& r = ranked[i];
      std::printf("%zu  %-24s  score %.4f  (%s)\n", i + 1, r.submission.name.c_str(), r.final_score,
                  format_metric_triplet(r.submission.mean_dsc, r.submission.mean_fnv_ml, r.submission.mean_fpv_ml)
                      .c_str());
    }
  });
}

// ---- report

struct ReportArgs {
  std::string metrics, out, hist, group_by = "both";
  std::size_t bins = 20;
};

void add_report(CLI::App& app) {
  auto a = std::make_shared<ReportArgs>();
  auto* sub = app.add_subcommand("report", "Aggregate tables and histogram data from metrics.csv");
  sub->add_option("--metrics", a->metrics, "metrics.csv from evaluate")->required();
  sub->add_option("--group-by", a->group_by, "fold, tracer, both or all")->capture_default_str();
  sub->add_option("--bins", a->bins, "Histogram bins")->capture_default_str();
  sub->add_option("--out", a->out, "report.json");
  sub->add_option("--hist", a->hist, "hist.json");
  sub->callback([a] {
    std::vector<std::string> warnings;
    const auto records = read_metrics_csv(a->metrics, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (records.empty()) throw DataError(a->metrics + ": no cases");
    const auto rows = aggregate(records, parse_group_by(a->group_by));
    std::printf("%-24s %6s  %-18s %-20s %-20s\n", "group", "n", "DSC", "FNV (ml)", "FPV (ml)");
    for (const auto& r : rows) {
      std::printf("%-24s %6zu  %-18s %-20s %-20s\n", r.group.c_str(), r.dsc.count,
                  format_mean_std(r.dsc).c_str(), format_mean_std(r.fnv_ml).c_str(),
                  format_mean_std(r.fpv_ml).c_str());
    }
    if (!a->out.empty()) write_json(build_report(records, parse_group_by(a->group_by), a->bins), a->out);
    if (!a->hist.empty()) write_json(emit_histograms(a->metrics, a->bins), a->hist);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PET/CT lesion segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags; flags take precedence");

  add_preprocess(app);
  add_augment(app);
  add_loss(app);
  add_components(app);
  add_evaluate(app);
  add_measures(app);
  add_ensemble(app);
  add_rank(app);
  add_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const petseg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return g_exit;
}
