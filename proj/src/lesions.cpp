#include "petseg/lesions.hpp"

#include <algorithm>
#include <limits>

namespace petseg {

LesionReport lesion_stats(const BinaryMask& mask, const ScalarVolume& suv, Connectivity conn) {
  require_same_lattice(mask.grid(), suv.grid(), "lesion_stats");
  const LabelMap labels = label_components(mask, conn);
  const auto n = static_cast<std::size_t>(labels.n_components());
  std::vector<std::uint64_t> count(n, 0);
  std::vector<double> sum(n, 0.0);
  std::vector<double> peak(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t l = labels[i];
    if (l == 0) continue;
    const auto k = static_cast<std::size_t>(l - 1);
    ++count[k];
    sum[k] += suv[i];
    peak[k] = std::max(peak[k], suv[i]);
  }

  const double vv = voxel_volume_ml(mask.spacing());
  LesionReport r;
  r.lesions.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    LesionRow row;
    row.label = static_cast<std::int32_t>(k + 1);
    row.mtv_ml = static_cast<double>(count[k]) * vv;
    row.suv_mean = sum[k] / static_cast<double>(count[k]);
    row.suv_max = peak[k];
    r.tmtv_ml += row.mtv_ml;
    r.tlg_ml += row.mtv_ml * row.suv_mean;
    r.lesions.push_back(row);
  }
  r.n_lesions = n;
  return r;
}

std::map<Tracer, TracerDistributions> cohort_measures(std::span<const LesionCase> cases) {
  if (cases.empty()) throw DomainError("cohort_measures needs at least one case");
  std::map<Tracer, TracerDistributions> out;
  for (const LesionCase& c : cases) {
    TracerDistributions& d = out[c.tracer];
    for (const LesionRow& row : c.report.lesions) {
      d.lesion_mtv_ml.push_back(row.mtv_ml);
      d.lesion_suv_mean.push_back(row.suv_mean);
      d.lesion_suv_max.push_back(row.suv_max);
    }
    d.patient_tmtv_ml.push_back(c.report.tmtv_ml);
    d.patient_tlg_ml.push_back(c.report.tlg_ml);
    d.patient_n_lesions.push_back(static_cast<double>(c.report.n_lesions));
    ++d.n_cases;
  }
  return out;
}

}  // namespace petseg
