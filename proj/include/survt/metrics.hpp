#pragma once

// Time-dependent concordance index and the Kaplan-Meier sanity-check utility.

#include <span>
#include <vector>

#include "survt/errors.hpp"

namespace survt {

struct RiskMatrix {
  std::vector<std::vector<double>> cif;  // per patient, non-decreasing rows
  std::vector<int> time_bin;
  std::vector<int> event;
};

enum class TieRule { kStrict, kHalf };

// Fraction of acceptable pairs (i uncensored, s_i < s_j) where
// F_i(s_i) > F_j(s_i). Ties score 0 under kStrict, 0.5 under kHalf.
// Rows shorter than a requested bin are read at their last column, so a
// single-column matrix degenerates to the classical C-index on one score.
// MetricError when no acceptable pair exists.
double ct_index(const RiskMatrix& risks, TieRule ties = TieRule::kStrict);

// Product-limit survival estimate; right-continuous steps, S = 1 before the
// first event time.
struct KaplanMeier {
  std::vector<double> times;     // distinct event times with deaths
  std::vector<double> survival;  // S just after each time
  double at(double t) const;
};

KaplanMeier kaplan_meier(std::span<const double> times, std::span<const int> events);

}  // namespace survt
