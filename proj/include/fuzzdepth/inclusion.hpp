#pragma once

// Pairwise operators between masks on a common grid.

#include <span>

#include "fuzzdepth/grid.hpp"

namespace fuzzdepth {

/// Probabilistic inclusion u ⊂p v: the expectation of v under the measure
/// induced by u, i.e. sum w*u*v / sum w*u. Zero when u has no mass.
double prob_inclusion(const ProbMask& u, const ProbMask& v);

/// Continuous subset operator on crisp regions: 1 - |A\B| / |A| with cell
/// volumes as the measure; 0 when |A| = 0 (same convention as prob_inclusion).
double subset_epsilon(const BinaryMask& a, const BinaryMask& b);

/// 2 * sum w*min(u,v) / (sum w*u + sum w*v). Throws DataError if both masks
/// have zero mass.
double fuzzy_dice(const ProbMask& u, const ProbMask& v);

/// sum w*min(u,v) / sum w*max(u,v). Throws DataError if both masks have zero
/// mass.
double prob_iou(const ProbMask& u, const ProbMask& v);

/// Same operators against a double-precision field (the ensemble mean); used
/// by the mean-based depth methods.
double prob_inclusion(const ProbMask& u, std::span<const double> field);
double prob_inclusion(std::span<const double> field, const ProbMask& v);
double fuzzy_dice(const ProbMask& u, std::span<const double> field);
double prob_iou(const ProbMask& u, std::span<const double> field);

}  // namespace fuzzdepth
