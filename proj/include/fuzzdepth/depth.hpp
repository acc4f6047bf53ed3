#pragma once

// Ensemble depth: eID on crisp masks, exact pairwise PID, the linear-time
// PID-mean approximation, and mean-based similarity baselines.
//
// Conventions shared by every method:
//   * IN_in / IN_out averages include the self term j == i;
//   * depth = min(in_in, in_out);
//   * rank 0 is the deepest member; ties go to the lower member index;
//   * results are bit-identical for any worker count.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzdepth/grid.hpp"

namespace fuzzdepth {

enum class DepthMethod { eid, pid, pid_mean, dice, iou };

std::string_view to_string(DepthMethod method);
/// Accepts "eid", "pid", "pid-mean", "dice" and "iou".
DepthMethod parse_depth_method(std::string_view name);

struct DepthOptions {
  std::size_t workers = 1;
  /// PID-mean records a warning when the coefficient of variation of member
  /// masses exceeds this value.
  double cv_warning_threshold = 0.5;
};

struct DepthResult {
  std::vector<std::string> ids;
  std::vector<double> in_in;
  std::vector<double> in_out;
  std::vector<double> depth;
  std::vector<std::size_t> rank;
  DepthMethod method = DepthMethod::pid;
  double cv_mass = 0.0;
  double elapsed_seconds = 0.0;
  std::size_t workers = 1;
  std::vector<std::string> warnings;

  std::size_t size() const { return ids.size(); }
  /// Member index holding rank r.
  std::size_t index_of_rank(std::size_t r) const;
};

/// Ranks by descending depth, ties broken by ascending index.
std::vector<std::size_t> rank_by_depth(const std::vector<double>& depth);

/// Population std / mean of member masses; 0 when the mean mass is 0.
double mass_cv(const std::vector<double>& masses);

/// eID. Every member must be binary-valued (0/1); see binarize(Ensemble, t).
DepthResult depth_eid(const Ensemble& e, const DepthOptions& options = {});

/// Exact PID from all N^2 probabilistic inclusions. Zero-mass members get
/// depth 0.
DepthResult depth_pid(const Ensemble& e, const DepthOptions& options = {});

/// PID-mean: each member against the ensemble mean. IN_in is exact; IN_out is
/// the approximation. Throws DataError when the mean has zero mass.
DepthResult depth_pid_mean(const Ensemble& e, const DepthOptions& options = {});

enum class SimilarityMeasure { fuzzy_dice, prob_iou };

/// depth = measure(member, mean); in_in = in_out = depth.
DepthResult depth_similarity_baseline(const Ensemble& e, SimilarityMeasure measure,
                                      const DepthOptions& options = {});

/// Dispatches on method.
DepthResult compute_depth(const Ensemble& e, DepthMethod method, const DepthOptions& options = {});

struct PidMeanComparison {
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  double rank_pearson = 0.0;
  double rank_kendall = 0.0;
  double cv_mass = 0.0;
  DepthResult pid;
  DepthResult pid_mean;
};

/// Runs exact PID and PID-mean and reports how far the approximation moved
/// the depths and ranks. Needs N >= 2.
PidMeanComparison compare_pid_vs_mean(const Ensemble& e, const DepthOptions& options = {});

}  // namespace fuzzdepth
