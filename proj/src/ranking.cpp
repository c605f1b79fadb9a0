#include "petseg/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "petseg/error.hpp"

namespace petseg {
namespace {

// 1-based ranks of `values`, smaller value = better rank.
std::vector<double> rank_ascending(const std::vector<double>& values, TieRule ties) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = ties == TieRule::kAverage ? (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0
                                               : static_cast<double>(i + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::vector<RankedSubmission> rank_submissions(std::span<const Submission> subs, TieRule ties) {
  if (subs.empty()) throw DomainError("rank_submissions needs at least one submission");
  std::vector<double> neg_dsc, fpv, fnv;
  for (const Submission& s : subs) {
    if (std::isnan(s.mean_dsc) || std::isnan(s.mean_fpv_ml) || std::isnan(s.mean_fnv_ml)) {
      throw DataError("submission '" + s.name + "' has a NaN metric");
    }
    neg_dsc.push_back(-s.mean_dsc);
    fpv.push_back(s.mean_fpv_ml);
    fnv.push_back(s.mean_fnv_ml);
  }
  const auto r_dsc = rank_ascending(neg_dsc, ties);
  const auto r_fpv = rank_ascending(fpv, ties);
  const auto r_fnv = rank_ascending(fnv, ties);

  std::vector<RankedSubmission> out;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    RankedSubmission r{subs[i], r_dsc[i], r_fpv[i], r_fnv[i], 0.0};
    r.final_score = 0.5 * r.rank_dsc + 0.25 * r.rank_fpv + 0.25 * r.rank_fnv;
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedSubmission& a, const RankedSubmission& b) {
    return a.final_score < b.final_score;
  });
  return out;
}

}  // namespace petseg
