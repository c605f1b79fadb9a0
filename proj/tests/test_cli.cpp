#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include "petseg/batch.hpp"
#include "petseg/ensemble.hpp"
#include "petseg/error.hpp"
#include "petseg/nifti.hpp"
#include "petseg/report.hpp"
#include "support.hpp"

using namespace petseg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PETSEG_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Ten cases across two tracers and five folds: gt/pred pairs on an 8^3 lattice.
void write_cohort(const support::TempDir& dir, int n = 10) {
  std::mt19937_64 rng(5);
  const Grid g{{8, 8, 8}, {2, 2, 2}, {0, 0, 0}};
  fs::create_directories(dir / "gt");
  fs::create_directories(dir / "pred");
  std::string manifest = "case_id,tracer,fold\n";
  for (int i = 0; i < n; ++i) {
    const std::string id = "case" + std::to_string(i);
    std::vector<std::uint8_t> gv(g.voxel_count(), 0), pv(g.voxel_count(), 0);
    std::bernoulli_distribution b(0.15);
    for (std::size_t k = 0; k < gv.size(); ++k) {
      gv[k] = b(rng);
      pv[k] = b(rng) ? !gv[k] : gv[k];
    }
    write_nifti(BinaryMask(g, gv), dir / ("gt/" + id + ".nii.gz"));
    write_nifti(BinaryMask(g, pv), dir / ("pred/" + id + ".nii.gz"));
    manifest += id + "," + (i % 2 ? "PSMA" : "FDG") + "," + std::to_string(i % 5) + "\n";
  }
  spit(dir / "manifest.csv", manifest);
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto rows = parse_manifest("case_id,tracer,fold\na,FDG,0\nb,psma,\n", "/g", "/p");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].gt_path == fs::path("/g/a.nii.gz"));
  CHECK(rows[0].pred_path == fs::path("/p/a.nii.gz"));
  CHECK(rows[1].tracer == Tracer::kPsma);
  CHECK(!rows[1].fold);

  CHECK_THROWS_AS(parse_manifest("case_id\na\na\n", "g", "p"), FormatError);
  CHECK_THROWS_AS(parse_manifest("case_id,fold\na,5\n", "g", "p"), FormatError);
  CHECK_THROWS_AS(parse_manifest("case_id,fold\na,x\n", "g", "p"), FormatError);
  CHECK_THROWS_AS(parse_manifest("tracer\nFDG\n", "g", "p"), FormatError);
  CHECK_THROWS_AS(parse_manifest("case_id,dose_bq\na,1e8\n", "g", "p"), FormatError);

  const auto suv = parse_manifest("case_id,dose_bq,decay_min,weight_kg\na,3.7e8,30,70\n", "g", "p");
  REQUIRE(suv[0].suv);
  CHECK(suv[0].suv->patient_weight_kg == 70.0);
}

TEST_CASE("evaluate a cohort") {
  support::TempDir dir("eval");
  write_cohort(dir);
  const auto cases = read_manifest(dir / "manifest.csv", dir / "gt", dir / "pred");
  const EvaluateResult r = run_evaluate(cases, {MetricOptions{}, 2});
  CHECK(r.ok());
  REQUIRE(r.metrics.size() == 10);
  CHECK(aggregate(r.metrics, GroupBy::kTracer).size() == 2);
  CHECK(std::is_sorted(r.metrics.begin(), r.metrics.end(),
                       [](const CaseMetrics& a, const CaseMetrics& b) { return a.case_id < b.case_id; }));

  write_evaluation(r, dir / "out");
  const auto back = read_metrics_csv(dir / "out/metrics.csv");
  CHECK(back == r.metrics);

  // The report is a pure function of metrics.csv.
  const auto report = nlohmann::json::parse(slurp(dir / "out/report.json"));
  auto recomputed = build_report(back, GroupBy::kBoth, 20);
  recomputed["failures"] = nlohmann::json::array();
  CHECK(report == recomputed);
}

TEST_CASE("identical pair and missing files") {
  support::TempDir dir("pair");
  const auto p = support::fnv_example();
  write_nifti(p.gt, dir / "a.nii.gz");
  spit(dir / "m.csv", "case_id,gt_path,pred_path\nsame,a.nii.gz,a.nii.gz\nlost,a.nii.gz,nope.nii.gz\n");
  const EvaluateResult r = run_evaluate(read_manifest(dir / "m.csv"));
  REQUIRE(r.metrics.size() == 1);
  CHECK(r.metrics[0].dsc == 1.0);
  CHECK(r.metrics[0].fpv_ml == 0.0);
  CHECK(r.metrics[0].fnv_ml == 0.0);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].case_id == "lost");
}

TEST_CASE("histograms") {
  std::vector<CaseMetrics> recs;
  for (int i = 0; i < 6; ++i) recs.push_back({"c" + std::to_string(i), i < 3 ? Tracer::kFdg : Tracer::kPsma, {}, 0.5, 1.0 * i, 2.0});
  const auto h = metric_histograms(recs, 10);
  const auto& dsc = h["dsc"];
  CHECK(dsc["series"].size() == 2);
  for (const auto& s : dsc["series"]) {
    int nonzero = 0;
    for (int c : s["counts"]) nonzero += c > 0;
    CHECK(nonzero == 1);
    CHECK(s["mean"].get<double>() == 0.5);
  }
  const auto by = aggregate(recs, GroupBy::kTracer);
  const auto& fnv = h["fnv_ml"]["series"];
  CHECK(fnv[0]["mean"].get<double>() == by[0].fnv_ml.mean);
  CHECK(fnv[1]["mean"].get<double>() == by[1].fnv_ml.mean);
  CHECK(h["fnv_ml"]["edges"].size() == 11);

  const Histogram flat = histogram(std::vector<double>{3.0, 3.0, 3.0}, 4);
  CHECK(flat.counts[0] + flat.counts[1] + flat.counts[2] + flat.counts[3] == 3);

  support::TempDir dir("hist");
  spit(dir / "m.csv", "case_id,tracer,fold,dsc,fpv_ml,fnv_ml\na,FDG,0,0.5,1,1\nb,XYZ,,0.7,0,2\n");
  std::vector<std::string> warnings;
  const auto j = emit_histograms(dir / "m.csv", 5, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(j["dsc"]["series"].size() == 2);
}

TEST_CASE("formatting fixtures") {
  CHECK(format_mean_std(Summary{0.6303, 0.2563, 10}) == "0.6303 ±0.2563");
  CHECK(format_fixed(NAN) == "nan");
  const std::string row = "ensemble,\"0.6687 / 10.9522 / 2.9684\"\n";
  const CsvTable t = parse_csv("name,cell\n" + row);
  const std::string cell = t.rows[0][1];
  double d = 0, fnv = 0, fpv = 0;
  REQUIRE(std::sscanf(cell.c_str(), "%lf / %lf / %lf", &d, &fnv, &fpv) == 3);
  CHECK(format_metric_triplet(d, fnv, fpv) == cell);
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), FormatError);
}

TEST_CASE("preprocessing pipeline") {
  const auto ph = support::make_phantom(support::default_lesions());
  const PipelineOutput out = run_pipeline(ph.pet_bqml, ph.ct_hu, ph.mask, ph.suv);
  CHECK(out.pet.spacing() == Vec3{2, 2, 2});
  CHECK(out.pet.kind() == VolumeKind::kPetSuv);
  CHECK(out.ct.kind() == VolumeKind::kCtNorm);
  REQUIRE(out.mask);
  CHECK(out.mask->grid() == out.pet.grid());
  CHECK(out.params.contains("steps"));

  const BinaryMask empty(ph.mask.grid(), std::uint8_t{0});
  const PipelineOutput neg = run_pipeline(ph.pet_bqml, ph.ct_hu, empty, ph.suv);
  CHECK(neg.mask->foreground_count() == 0);

  support::TempDir a("pa"), b("pb");
  write_pipeline(out, a.path());
  write_pipeline(run_pipeline(ph.pet_bqml, ph.ct_hu, ph.mask, ph.suv), b.path());
  for (const char* f : {"pet_suv.nii.gz", "ct_norm.nii.gz", "mask.nii.gz", "preprocess.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("command line") {
  support::TempDir dir("cli");
  spit(dir / "subs.csv", "name,dsc,fpv_ml,fnv_ml\nA,0.6,1,1\nB,0.6,2,2\nC,0.5,3,3\n");
  CHECK(run_cli("rank --submissions " + (dir / "subs.csv").string() + " --out " + (dir / "r1.csv").string()) == 0);
  CHECK(parse_csv(slurp(dir / "r1.csv")).rows[0].back() == "1.25");

  // Config file values apply unless a flag overrides them.
  spit(dir / "cfg.json", R"({"rank": {"ties": "min"}})");
  CHECK(run_cli("--config " + (dir / "cfg.json").string() + " rank --submissions " +
                (dir / "subs.csv").string() + " --out " + (dir / "r2.csv").string()) == 0);
  CHECK(parse_csv(slurp(dir / "r2.csv")).rows[0].back() == "1");
  CHECK(run_cli("--config " + (dir / "cfg.json").string() + " rank --ties average --submissions " +
                (dir / "subs.csv").string() + " --out " + (dir / "r3.csv").string()) == 0);
  CHECK(slurp(dir / "r3.csv") == slurp(dir / "r1.csv"));

  CHECK(run_cli("rank --submissions " + (dir / "subs.csv").string() + " --ties best") != 0);
  CHECK(run_cli("rank --submissions " + (dir / "missing.csv").string()) == 2);

  write_cohort(dir, 4);
  CHECK(run_cli("evaluate --manifest " + (dir / "manifest.csv").string() + " --gt-dir " + (dir / "gt").string() +
                " --pred-dir " + (dir / "pred").string() + " --out " + (dir / "ev").string()) == 0);
  CHECK(fs::exists(dir / "ev/metrics.csv"));
  CHECK(run_cli("report --metrics " + (dir / "ev/metrics.csv").string() + " --out " + (dir / "rep.json").string()) == 0);
  CHECK(fs::exists(dir / "rep.json"));
}

TEST_CASE("ensemble plan and blend through files") {
  support::TempDir dir("blend");
  const Grid g{{21, 13, 9}, {2, 2, 2}, {4, -6, 0}};
  std::vector<double> v(g.voxel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.25 * static_cast<double>(i % 23);
  const ScalarVolume pet(g, v, VolumeKind::kPetSuv);
  write_nifti(pet, dir / "pet.nii.gz");
  REQUIRE(run_cli("ensemble plan --reference " + (dir / "pet.nii.gz").string() + " --window 8 --overlap 0.5 --out " +
                  (dir / "plan.json").string() + " --export-windows " + (dir / "win").string()) == 0);
  const auto plan = nlohmann::json::parse(slurp(dir / "plan.json"));
  // Stand-in model: foreground margin = PET - 2.5.
  for (const auto& w : plan["windows"]) {
    const std::string stem = w["file"].get<std::string>();
    const auto idx = w["index"];
    const std::string tag = std::to_string(idx[0].get<int>()) + "_" + std::to_string(idx[1].get<int>()) + "_" +
                            std::to_string(idx[2].get<int>());
    const ScalarVolume in = read_nifti(dir / "win" / ("in_" + tag + "_pet.nii.gz"));
    std::vector<double> m(in.data().begin(), in.data().end());
    for (double& x : m) x -= 2.5;
    write_nifti(ScalarVolume(in.grid(), m), dir / "win" / stem);
  }
  REQUIRE(run_cli("ensemble blend --plan " + (dir / "plan.json").string() + " --windows " + (dir / "win").string() +
                  " --out " + (dir / "prob.nii.gz").string()) == 0);
  const ScalarVolume prob = read_nifti(dir / "prob.nii.gz");
  const ClassProbabilities want =
      sliding_window_inference(pet, ScalarVolume(g, 0.0), plan_windows(g.dims, 8, 0.5), pet_threshold_predictor(2.5, 1.0));
  REQUIRE(prob.grid() == g);
  for (std::size_t i = 0; i < prob.size(); ++i) CHECK(prob[i] == doctest::Approx(want.foreground[i]).epsilon(1e-12));

  write_nifti(ScalarVolume(g, 0.0, VolumeKind::kProb), dir / "zero.nii.gz");
  REQUIRE(run_cli("ensemble average --inputs " + (dir / "prob.nii.gz").string() + " " + (dir / "zero.nii.gz").string() +
                  " --out " + (dir / "avg.nii.gz").string()) == 0);
  REQUIRE(run_cli("ensemble binarize --input " + (dir / "avg.nii.gz").string() + " --out " + (dir / "bin.nii.gz").string()) == 0);
  const ScalarVolume avg = read_nifti(dir / "avg.nii.gz");
  const BinaryMask bin = read_nifti_mask(dir / "bin.nii.gz");
  for (std::size_t i = 0; i < avg.size(); ++i) {
    CHECK(avg[i] == doctest::Approx(prob[i] / 2).epsilon(1e-12));
    CHECK(bin[i] == (avg[i] > 0.5 ? 1 : 0));
  }
}
