#pragma once

// Rank-agreement statistics and the stability-after-removal experiment.
// All agreement numbers are computed on rank vectors, never on raw depths.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fuzzdepth/depth.hpp"

namespace fuzzdepth {

/// Product-moment correlation. Needs equal lengths >= 2 and nonzero variance
/// in both inputs (DataError otherwise).
double pearson(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b over all pairs. DataError when either input is constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

std::vector<double> to_doubles(std::span<const std::size_t> ranks);

struct RankScatterRow {
  std::string id;
  std::size_t rank1 = 0;
  std::size_t rank2 = 0;
  std::size_t abs_delta = 0;
};

struct RankScatter {
  std::vector<RankScatterRow> rows;  // sorted by abs_delta, largest first
  double pearson = 0.0;
  double kendall = 0.0;
};

/// Joins two results by member ID. DataError if the ID sets differ.
RankScatter rank_scatter(const DepthResult& a, const DepthResult& b);

/// Pairwise Pearson correlation of ranks between every pair of results,
/// joined by ID against the first result.
std::vector<std::vector<double>> consistency_matrix(const std::vector<DepthResult>& results);

struct StabilityReport {
  DepthMethod method = DepthMethod::pid;
  std::size_t n = 0;
  std::vector<std::string> removed_ids;
  double pearson = 0.0;
  double kendall = 0.0;
  /// Set when fewer than two members survive; correlations are NaN then.
  bool degenerate = false;
  std::string note;
};

/// Ranks all members, drops the k lowest-depth ones, re-ranks the rest and
/// correlates the survivors' old ranks (compacted to 0..N-k-1) with the new.
StabilityReport stability_test(const Ensemble& e, DepthMethod method, std::size_t k_remove,
                               const DepthOptions& options = {});

}  // namespace fuzzdepth
