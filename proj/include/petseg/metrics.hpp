#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "petseg/components.hpp"
#include "petseg/volume.hpp"

namespace petseg {

enum class Tracer { kFdg, kPsma, kUnknown };

std::string_view to_string(Tracer t);
// Case-insensitive "FDG"/"PSMA"; anything else maps to kUnknown.
Tracer parse_tracer(std::string_view text);

struct MetricOptions {
  Connectivity connectivity = Connectivity::kFace6;
  // DSC when both masks are empty (negative-control cases); otherwise 0/0.
  double both_empty_dsc = 1.0;
};

// 2|G n P| / (|G| + |P|). Masks must share dims and spacing.
double dsc(const BinaryMask& gt, const BinaryMask& pred, const MetricOptions& opts = {});

// Volume (ml) of predicted components that do not touch the ground truth.
double fpv(const BinaryMask& gt, const BinaryMask& pred, const Vec3& spacing,
           Connectivity conn = Connectivity::kFace6);
// Volume (ml) of ground-truth components the prediction misses entirely.
double fnv(const BinaryMask& gt, const BinaryMask& pred, const Vec3& spacing,
           Connectivity conn = Connectivity::kFace6);

struct CaseMetrics {
  std::string case_id;
  Tracer tracer = Tracer::kUnknown;
  std::optional<int> fold;
  double dsc = 0.0;
  double fpv_ml = 0.0;
  double fnv_ml = 0.0;

  friend bool operator==(const CaseMetrics&, const CaseMetrics&) = default;
};

// All three metrics on the ground-truth lattice. A prediction on a different
// lattice is first resampled onto it with nearest neighbour.
CaseMetrics evaluate_masks(const BinaryMask& gt, const BinaryMask& pred,
                           const MetricOptions& opts = {});

CaseMetrics evaluate_case(const std::filesystem::path& gt_path,
                          const std::filesystem::path& pred_path, Tracer tracer,
                          const MetricOptions& opts = {});

// Sample statistics; std uses n - 1 and is 0 for a single value.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

enum class GroupBy { kFold, kTracer, kBoth, kAll };

GroupBy parse_group_by(std::string_view text);

struct AggregateRow {
  std::string group;             // "fold=0,tracer=FDG", "tracer=PSMA", "all", ...
  std::optional<int> fold;       // set when grouping by fold and the records carry one
  std::optional<Tracer> tracer;  // set when grouping by tracer
  Summary dsc;
  Summary fpv_ml;
  Summary fnv_ml;
};

// Rows ordered by (fold, tracer); records without a fold form their own group
// that sorts first.
std::vector<AggregateRow> aggregate(std::span<const CaseMetrics> records, GroupBy group_by);

}  // namespace petseg
