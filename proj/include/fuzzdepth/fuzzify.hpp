#pragma once

// Probabilistic masks from raw scalar fields.

#include <vector>

#include "fuzzdepth/grid.hpp"

namespace fuzzdepth {

/// Unbounded real values on a grid; NaN and Inf are rejected.
class ScalarField {
 public:
  ScalarField(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return min_; }
  double max() const { return max_; }
  double range() const { return max_ - min_; }

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Sublevel set {x | f(x) < q}.
BinaryMask hard_isocontour(const ScalarField& f, double q);

/// Level-centred band: u(x) = max(0, 1 - |f(x) - q| / width).
ProbMask fuzzy_isocontour(const ScalarField& f, double q, double width);

/// Falloff width used when none is given: 5% of the field's value range.
double default_fuzzy_width(const ScalarField& f);

enum class DensityNormalization { minmax, scale_by_max };

/// minmax: (f - min) / (max - min), needs a non-constant field.
/// scale_by_max: clamp(f / max, 0, 1), needs max > 0.
ProbMask normalize_density(const ScalarField& f, DensityNormalization mode);

}  // namespace fuzzdepth
