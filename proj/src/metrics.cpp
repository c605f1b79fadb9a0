#include "petseg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "petseg/kernels/kernels.hpp"
#include "petseg/nifti.hpp"
#include "petseg/preprocess.hpp"

namespace petseg {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Voxels of components of `labelled` that do not touch `other`.
std::uint64_t unmatched_voxels(const BinaryMask& labelled, const BinaryMask& other,
                               Connectivity conn) {
  const LabelMap labels = label_components(labelled, conn);
  if (labels.n_components() == 0) return 0;
  const kernels::ComponentTally t =
      kernels::tally_components(labels.data(), labels.n_components(), other.data());
  std::uint64_t total = 0;
  for (std::size_t l = 1; l < t.sizes.size(); ++l) {
    if (!t.hit[l]) total += t.sizes[l];
  }
  return total;
}

}  // namespace

std::string_view to_string(Tracer t) {
  switch (t) {
    case Tracer::kFdg: return "FDG";
    case Tracer::kPsma: return "PSMA";
    case Tracer::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

Tracer parse_tracer(std::string_view text) {
  const std::string u = upper(text);
  if (u == "FDG") return Tracer::kFdg;
  if (u == "PSMA") return Tracer::kPsma;
  return Tracer::kUnknown;
}

double dsc(const BinaryMask& gt, const BinaryMask& pred, const MetricOptions& opts) {
  require_same_lattice(gt.grid(), pred.grid(), "dsc");
  const kernels::OverlapCounts c = kernels::overlap_counts(gt.data(), pred.data());
  if (c.a + c.b == 0) return opts.both_empty_dsc;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

double fpv(const BinaryMask& gt, const BinaryMask& pred, const Vec3& spacing, Connectivity conn) {
  require_same_lattice(gt.grid(), pred.grid(), "fpv");
  return static_cast<double>(unmatched_voxels(pred, gt, conn)) * voxel_volume_ml(spacing);
}

double fnv(const BinaryMask& gt, const BinaryMask& pred, const Vec3& spacing, Connectivity conn) {
  require_same_lattice(gt.grid(), pred.grid(), "fnv");
  return static_cast<double>(unmatched_voxels(gt, pred, conn)) * voxel_volume_ml(spacing);
}

CaseMetrics evaluate_masks(const BinaryMask& gt, const BinaryMask& pred, const MetricOptions& opts) {
  const BinaryMask aligned =
      pred.grid() == gt.grid() ? pred : resample_to_grid(pred, gt.grid(), kernels::OutOfBounds::kZero);
  CaseMetrics m;
  m.dsc = dsc(gt, aligned, opts);
  m.fpv_ml = fpv(gt, aligned, gt.spacing(), opts.connectivity);
  m.fnv_ml = fnv(gt, aligned, gt.spacing(), opts.connectivity);
  return m;
}

CaseMetrics evaluate_case(const std::filesystem::path& gt_path,
                          const std::filesystem::path& pred_path, Tracer tracer,
                          const MetricOptions& opts) {
  const BinaryMask gt = read_nifti_mask(gt_path);
  const BinaryMask pred = read_nifti_mask(pred_path);
  CaseMetrics m = evaluate_masks(gt, pred, opts);
  m.tracer = tracer;
  return m;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("cannot summarize an empty sample");
  Summary s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

GroupBy parse_group_by(std::string_view text) {
  const std::string u = upper(text);
  if (u == "FOLD") return GroupBy::kFold;
  if (u == "TRACER") return GroupBy::kTracer;
  if (u == "BOTH" || u == "FOLD,TRACER" || u == "FOLD_TRACER") return GroupBy::kBoth;
  if (u == "ALL" || u == "NONE") return GroupBy::kAll;
  throw DomainError("unknown grouping '" + std::string(text) + "' (fold, tracer, both, all)");
}

std::vector<AggregateRow> aggregate(std::span<const CaseMetrics> records, GroupBy group_by) {
  if (records.empty()) throw DomainError("aggregate needs at least one record");
  const bool by_fold = group_by == GroupBy::kFold || group_by == GroupBy::kBoth;
  const bool by_tracer = group_by == GroupBy::kTracer || group_by == GroupBy::kBoth;

  // fold key: -1 stands for "no fold" and sorts first.
  using Key = std::pair<int, int>;
  std::map<Key, std::vector<const CaseMetrics*>> groups;
  for (const CaseMetrics& r : records) {
    const int f = by_fold ? r.fold.value_or(-1) : -1;
    const int t = by_tracer ? static_cast<int>(r.tracer) : -1;
    groups[{f, t}].push_back(&r);
  }

  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    if (by_fold && key.first >= 0) row.fold = key.first;
    if (by_tracer) row.tracer = static_cast<Tracer>(key.second);
    if (by_fold) row.group = "fold=" + (row.fold ? std::to_string(*row.fold) : std::string("NA"));
    if (by_tracer) {
      if (!row.group.empty()) row.group += ",";
      row.group += "tracer=" + std::string(to_string(*row.tracer));
    }
    if (row.group.empty()) row.group = "all";
    std::vector<double> d, fp, fn;
    for (const CaseMetrics* m : members) {
      d.push_back(m->dsc);
      fp.push_back(m->fpv_ml);
      fn.push_back(m->fnv_ml);
    }
    row.dsc = summarize(d);
    row.fpv_ml = summarize(fp);
    row.fnv_ml = summarize(fn);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace petseg
