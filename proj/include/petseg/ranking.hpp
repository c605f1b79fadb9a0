#pragma once

#include <span>
#include <string>
#include <vector>

namespace petseg {

struct Submission {
  std::string name;
  double mean_dsc = 0.0;
  double mean_fpv_ml = 0.0;
  double mean_fnv_ml = 0.0;
};

// kAverage: tied entries share the mean of their positions (1.5, 1.5, 3).
// kMin: tied entries share the best position (1, 1, 3).
enum class TieRule { kAverage, kMin };

struct RankedSubmission {
  Submission submission;
  double rank_dsc = 0.0;
  double rank_fpv = 0.0;
  double rank_fnv = 0.0;
  double final_score = 0.0;  // 0.5 rank_dsc + 0.25 rank_fpv + 0.25 rank_fnv
};

// Ranks each metric separately (higher DSC is better, lower FPV/FNV is better)
// and returns entries ordered by final score, lower first; equal scores keep
// input order.
std::vector<RankedSubmission> rank_submissions(std::span<const Submission> subs,
                                               TieRule ties = TieRule::kAverage);

}  // namespace petseg
