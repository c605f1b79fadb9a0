#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "petseg/lesions.hpp"
#include "petseg/metrics.hpp"
#include "petseg/ranking.hpp"

namespace petseg {

// Fixed-point text, "%.4f" by default.
std::string format_fixed(double value, int decimals = 4);
// "0.6303 ±0.2563"
std::string format_mean_std(const Summary& s, int decimals = 4);
// Table-style "DSC / FNV / FPV" cell, e.g. "0.6687 / 10.9522 / 2.9684".
std::string format_metric_triplet(double dsc, double fnv_ml, double fpv_ml, int decimals = 4);

// Minimal RFC 4180 reader: header row plus records, quoted fields allowed.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position or -1.
  int column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string csv_escape(std::string_view field);

// Shortest text that parses back to the same double.
std::string exact_number(double v);

// Columns case_id, tracer, fold, dsc, fpv_ml, fnv_ml. Values are written with
// round-trip precision, so read_metrics_csv(metrics_csv(x)) == x.
std::string metrics_csv(std::span<const CaseMetrics> records);
void write_metrics_csv(std::span<const CaseMetrics> records, const std::filesystem::path& path);
// Unknown tracer labels become UNKNOWN; each such label is appended to
// `warnings` when given.
std::vector<CaseMetrics> parse_metrics_csv(std::string_view text,
                                           std::vector<std::string>* warnings = nullptr);
std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* warnings = nullptr);

struct Histogram {
  std::vector<double> edges;           // bins + 1 ascending edges
  std::vector<std::uint64_t> counts;   // values in [edge_i, edge_i+1); last bin closed
};

// Equal-width bins over [lo, hi]. When lo == hi the range widens to
// [lo - 0.5, lo + 0.5] so the single value lands in one bin.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);
// Range taken from the data.
Histogram histogram(std::span<const double> values, std::size_t bins);

// Per-metric, per-tracer histograms on shared edges, each series carrying
// the group mean.
nlohmann::json metric_histograms(std::span<const CaseMetrics> records, std::size_t bins);

nlohmann::json aggregate_json(std::span<const AggregateRow> rows);

// Full report: aggregates for `group_by`, the fold x tracer breakdown, the
// overall row, and histograms.
nlohmann::json build_report(std::span<const CaseMetrics> records, GroupBy group_by,
                            std::size_t bins);

// Pooled lesion/patient measures per tracer with histograms.
nlohmann::json cohort_json(const std::map<Tracer, TracerDistributions>& cohort, std::size_t bins);

// Rows label, mtv_ml, suv_mean, suv_max, tlg_ml, then a "total" row holding
// TMTV, the volume-weighted SUV mean, the peak SUV and TLG.
std::string lesion_csv(const LesionReport& report);

std::vector<Submission> parse_submissions_csv(std::string_view text);
std::string ranking_csv(std::span<const RankedSubmission> ranked);

}  // namespace petseg
