#pragma once

// Contour boxplots: the deepest member plus union/intersection envelopes of
// depth-ranked percentile groups.

#include <filesystem>
#include <string>
#include <vector>

#include "fuzzdepth/depth.hpp"
#include "fuzzdepth/grid.hpp"

namespace fuzzdepth {

struct BoxplotBand {
  double percentile = 1.0;
  BinaryMask union_mask;
  BinaryMask intersection_mask;
  std::vector<std::string> member_ids;  // in rank order
};

struct BoxplotArtifact {
  std::string median_id;
  BinaryMask median;  // binarized rank-0 member
  std::vector<BoxplotBand> bands;
  std::vector<std::string> outlier_ids;  // lowest depth last
  double threshold = 0.5;
};

/// Number of members in the band at percentile p: ceil(p * n), at least 1.
std::size_t band_size(double p, std::size_t n);

/// Band at p holds the band_size(p, N) deepest members; union and
/// intersection are taken over their masks binarized at `threshold`.
/// Outliers are the `outlier_count` lowest-depth members.
BoxplotArtifact build_boxplot(const Ensemble& e, const DepthResult& d,
                              const std::vector<double>& percentiles, double threshold,
                              std::size_t outlier_count = 0);

/// Writes one 8-bit binary PGM per band for the slice of a 2D or 3D grid
/// taken by fixing `axis` at `index`. 2D grids are drawn whole; axis and
/// index are still range-checked. Pixel levels: 0 outside the union, 96 inside the
/// intersection, 176 in union minus intersection, 255 on the median
/// member's boundary.
std::vector<std::filesystem::path> emit_slice_images(const BoxplotArtifact& a, const Ensemble& e,
                                                     std::size_t axis, std::size_t index,
                                                     const std::filesystem::path& out_dir);

}  // namespace fuzzdepth
