#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "petseg/components.hpp"
#include "petseg/metrics.hpp"
#include "petseg/volume.hpp"

namespace petseg {

struct LesionRow {
  std::int32_t label = 0;
  double mtv_ml = 0.0;
  double suv_mean = 0.0;
  double suv_max = 0.0;
};

// Per-lesion rows plus patient rollups: tmtv = sum of mtv, tlg = sum of
// mtv * suv_mean, n_lesions = number of rows.
struct LesionReport {
  std::vector<LesionRow> lesions;
  double tmtv_ml = 0.0;
  double tlg_ml = 0.0;
  std::size_t n_lesions = 0;
};

// Lesions are the connected components of `mask`, measured on the mask's own
// lattice (no resampling). `suv` must share dims and spacing with the mask.
LesionReport lesion_stats(const BinaryMask& mask, const ScalarVolume& suv,
                          Connectivity conn = Connectivity::kFace6);

struct LesionCase {
  std::string case_id;
  Tracer tracer = Tracer::kUnknown;
  LesionReport report;
};

// Pooled lesion-level and patient-level values for one tracer.
struct TracerDistributions {
  std::vector<double> lesion_mtv_ml;
  std::vector<double> lesion_suv_mean;
  std::vector<double> lesion_suv_max;
  std::vector<double> patient_tmtv_ml;
  std::vector<double> patient_tlg_ml;
  std::vector<double> patient_n_lesions;
  std::size_t n_cases = 0;
};

// Cases pooled per tracer, cases in input order within a tracer.
std::map<Tracer, TracerDistributions> cohort_measures(std::span<const LesionCase> cases);

}  // namespace petseg
