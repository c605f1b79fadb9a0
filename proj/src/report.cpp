#include "petseg/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "petseg/error.hpp"

namespace petseg {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw FormatError(what + ": not a number: '" + text + "'");
  }
  return v;
}

std::optional<int> parse_fold(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty() || t == "NA") return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw FormatError(what + ": bad fold '" + text + "'");
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json summary_json(const Summary& s) {
  return json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}, {"cell", format_mean_std(s)}};
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return summarize(v).mean;
}

// Shared-edge histograms for a set of named series.
json series_histograms(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                       std::size_t bins) {
  std::vector<double> pooled;
  for (const auto& [name, values] : series) pooled.insert(pooled.end(), values.begin(), values.end());
  double lo = 0.0;
  double hi = 0.0;
  if (!pooled.empty()) {
    const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
    lo = *mn;
    hi = *mx;
  }
  json out;
  out["edges"] = histogram(pooled, bins, lo, hi).edges;
  json arr = json::array();
  for (const auto& [name, values] : series) {
    const Histogram h = histogram(values, bins, lo, hi);
    arr.push_back({{"group", name},
                   {"n", values.size()},
                   {"mean", values.empty() ? json(nullptr) : json(mean_of(values))},
                   {"counts", h.counts}});
  }
  out["series"] = std::move(arr);
  return out;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_mean_std(const Summary& s, int decimals) {
  return format_fixed(s.mean, decimals) + " ±" + format_fixed(s.std, decimals);
}

std::string format_metric_triplet(double dsc, double fnv_ml, double fpv_ml, int decimals) {
  return format_fixed(dsc, decimals) + " / " + format_fixed(fnv_ml, decimals) + " / " +
         format_fixed(fpv_ml, decimals);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool any = false;  // current record has content
  std::size_t line = 1;
  auto end_record = [&] {
    rec.push_back(std::move(field));
    field.clear();
    if (any || rec.size() > 1 || !rec.front().empty()) records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        rec.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quote near line " + std::to_string(line));
  if (any || !field.empty()) end_record();

  CsvTable t;
  if (records.empty()) throw FormatError("csv: missing header row");
  t.header = std::move(records.front());
  for (auto& h : t.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw FormatError("csv: record " + std::to_string(r) + " has " +
                        std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string exact_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

std::string metrics_csv(std::span<const CaseMetrics> records) {
  std::string out = "case_id,tracer,fold,dsc,fpv_ml,fnv_ml\n";
  for (const auto& r : records) {
    out += csv_escape(r.case_id);
    out += ',';
    out += to_string(r.tracer);
    out += ',';
    if (r.fold) out += std::to_string(*r.fold);
    out += ',' + exact_number(r.dsc) + ',' + exact_number(r.fpv_ml) + ',' + exact_number(r.fnv_ml);
    out += '\n';
  }
  return out;
}

void write_metrics_csv(std::span<const CaseMetrics> records, const std::filesystem::path& path) {
  write_text(path, metrics_csv(records));
}

std::vector<CaseMetrics> parse_metrics_csv(std::string_view text,
                                           std::vector<std::string>* warnings) {
  const CsvTable t = parse_csv(text);
  const int c_id = t.column("case_id");
  const int c_tr = t.column("tracer");
  const int c_fold = t.column("fold");
  const int c_dsc = t.column("dsc");
  const int c_fpv = t.column("fpv_ml");
  const int c_fnv = t.column("fnv_ml");
  if (c_id < 0 || c_dsc < 0 || c_fpv < 0 || c_fnv < 0) {
    throw FormatError("metrics csv needs columns case_id, dsc, fpv_ml, fnv_ml");
  }
  std::vector<CaseMetrics> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    CaseMetrics m;
    m.case_id = row[static_cast<std::size_t>(c_id)];
    const std::string where = "case " + m.case_id;
    if (c_tr >= 0) {
      const std::string label = trim(row[static_cast<std::size_t>(c_tr)]);
      m.tracer = parse_tracer(label);
      if (m.tracer == Tracer::kUnknown && label != "UNKNOWN" && warnings) {
        warnings->push_back(where + ": unknown tracer '" + label + "', grouped as UNKNOWN");
      }
    }
    if (c_fold >= 0) m.fold = parse_fold(row[static_cast<std::size_t>(c_fold)], where);
    m.dsc = parse_double(row[static_cast<std::size_t>(c_dsc)], where + " dsc");
    m.fpv_ml = parse_double(row[static_cast<std::size_t>(c_fpv)], where + " fpv_ml");
    m.fnv_ml = parse_double(row[static_cast<std::size_t>(c_fnv)], where + " fnv_ml");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* warnings) {
  return parse_metrics_csv(read_text(path), warnings);
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw DomainError("histogram range must be finite with lo <= hi");
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (!std::isfinite(v) || v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    b = std::min(b, bins - 1);
    // Float division can land one bin off near an edge.
    while (b > 0 && v < h.edges[b]) --b;
    while (b + 1 < bins && v >= h.edges[b + 1]) ++b;
    ++h.counts[b];
  }
  return h;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  double lo = 0.0;
  double hi = 0.0;
  bool seen = false;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = seen ? std::min(lo, v) : v;
    hi = seen ? std::max(hi, v) : v;
    seen = true;
  }
  return histogram(values, bins, lo, hi);
}

json metric_histograms(std::span<const CaseMetrics> records, std::size_t bins) {
  std::map<Tracer, std::array<std::vector<double>, 3>> by_tracer;
  for (const auto& r : records) {
    auto& v = by_tracer[r.tracer];
    v[0].push_back(r.dsc);
    v[1].push_back(r.fnv_ml);
    v[2].push_back(r.fpv_ml);
  }
  static constexpr const char* kNames[3] = {"dsc", "fnv_ml", "fpv_ml"};
  json out = json::object();
  for (int m = 0; m < 3; ++m) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const auto& [tracer, values] : by_tracer) {
      series.emplace_back(std::string(to_string(tracer)), values[static_cast<std::size_t>(m)]);
    }
    json h = series_histograms(series, bins);
    for (auto& s : h["series"]) {
      s["tracer"] = s["group"];
      s.erase("group");
    }
    out[kNames[m]] = std::move(h);
  }
  return out;
}

json aggregate_json(std::span<const AggregateRow> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j{{"group", r.group},
           {"dsc", summary_json(r.dsc)},
           {"fpv_ml", summary_json(r.fpv_ml)},
           {"fnv_ml", summary_json(r.fnv_ml)}};
    j["fold"] = r.fold ? json(*r.fold) : json(nullptr);
    j["tracer"] = r.tracer ? json(std::string(to_string(*r.tracer))) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

json build_report(std::span<const CaseMetrics> records, GroupBy group_by, std::size_t bins) {
  json out;
  out["n_cases"] = records.size();
  const auto grouped = aggregate(records, group_by);
  const auto both = aggregate(records, GroupBy::kBoth);
  const auto tracers = aggregate(records, GroupBy::kTracer);
  const auto overall = aggregate(records, GroupBy::kAll);
  out["aggregates"] = aggregate_json(grouped);
  out["fold_tracer"] = aggregate_json(both);
  out["by_tracer"] = aggregate_json(tracers);
  out["overall"] = aggregate_json(overall).at(0);
  out["histograms"] = metric_histograms(records, bins);
  return out;
}

json cohort_json(const std::map<Tracer, TracerDistributions>& cohort, std::size_t bins) {
  using Member = std::vector<double> TracerDistributions::*;
  static constexpr std::pair<const char*, Member> kFields[] = {
      {"lesion_mtv_ml", &TracerDistributions::lesion_mtv_ml},
      {"lesion_suv_mean", &TracerDistributions::lesion_suv_mean},
      {"lesion_suv_max", &TracerDistributions::lesion_suv_max},
      {"patient_tmtv_ml", &TracerDistributions::patient_tmtv_ml},
      {"patient_tlg_ml", &TracerDistributions::patient_tlg_ml},
      {"patient_n_lesions", &TracerDistributions::patient_n_lesions},
  };
  json out;
  json counts = json::object();
  for (const auto& [tracer, d] : cohort) counts[std::string(to_string(tracer))] = d.n_cases;
  out["n_cases"] = std::move(counts);
  json measures = json::object();
  for (const auto& [name, member] : kFields) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const auto& [tracer, d] : cohort) series.emplace_back(std::string(to_string(tracer)), d.*member);
    json h = series_histograms(series, bins);
    for (auto& s : h["series"]) {
      s["tracer"] = s["group"];
      s.erase("group");
    }
    measures[name] = std::move(h);
  }
  out["measures"] = std::move(measures);
  return out;
}

std::string lesion_csv(const LesionReport& report) {
  std::string out = "label,mtv_ml,suv_mean,suv_max,tlg_ml\n";
  double peak = 0.0;
  for (const auto& l : report.lesions) {
    out += std::to_string(l.label) + ',' + exact_number(l.mtv_ml) + ',' + exact_number(l.suv_mean) +
           ',' + exact_number(l.suv_max) + ',' + exact_number(l.mtv_ml * l.suv_mean) + '\n';
    peak = &l == &report.lesions.front() ? l.suv_max : std::max(peak, l.suv_max);
  }
  const double weighted = report.tmtv_ml > 0.0 ? report.tlg_ml / report.tmtv_ml : 0.0;
  out += "total," + exact_number(report.tmtv_ml) + ',' + exact_number(weighted) + ',' +
         exact_number(peak) + ',' + exact_number(report.tlg_ml) + '\n';
  return out;
}

std::vector<Submission> parse_submissions_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const int c_name = t.column("name");
  const int c_dsc = t.column("dsc");
  const int c_fpv = t.column("fpv_ml");
  const int c_fnv = t.column("fnv_ml");
  if (c_name < 0 || c_dsc < 0 || c_fpv < 0 || c_fnv < 0) {
    throw FormatError("submissions csv needs columns name, dsc, fpv_ml, fnv_ml");
  }
  std::vector<Submission> out;
  for (const auto& row : t.rows) {
    Submission s;
    s.name = row[static_cast<std::size_t>(c_name)];
    s.mean_dsc = parse_double(row[static_cast<std::size_t>(c_dsc)], s.name + " dsc");
    s.mean_fpv_ml = parse_double(row[static_cast<std::size_t>(c_fpv)], s.name + " fpv_ml");
    s.mean_fnv_ml = parse_double(row[static_cast<std::size_t>(c_fnv)], s.name + " fnv_ml");
    out.push_back(std::move(s));
  }
  return out;
}

std::string ranking_csv(std::span<const RankedSubmission> ranked) {
  std::string out = "name,dsc,fpv_ml,fnv_ml,rank_dsc,rank_fpv,rank_fnv,score\n";
  for (const auto& r : ranked) {
    out += csv_escape(r.submission.name) + ',' + exact_number(r.submission.mean_dsc) + ',' +
           exact_number(r.submission.mean_fpv_ml) + ',' + exact_number(r.submission.mean_fnv_ml) +
           ',' + exact_number(r.rank_dsc) + ',' + exact_number(r.rank_fpv) + ',' +
           exact_number(r.rank_fnv) + ',' + exact_number(r.final_score) + '\n';
  }
  return out;
}

}  // namespace petseg
