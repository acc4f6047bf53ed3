#include "fuzzdepth/fuzzify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fuzzdepth/error.hpp"

namespace fuzzdepth {

ScalarField::ScalarField(GridSpec grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count()) {
    throw DataError("field has " + std::to_string(values_.size()) + " values, grid has " +
                    std::to_string(grid_.cell_count()) + " cells");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("field value at cell " + std::to_string(i) + " is not finite");
    }
  }
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

BinaryMask hard_isocontour(const ScalarField& f, double q) {
  const auto v = f.values();
  std::vector<std::uint8_t> bits(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] < q;
  return BinaryMask(f.grid(), std::move(bits));
}

ProbMask fuzzy_isocontour(const ScalarField& f, double q, double width) {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw InvalidArgument("fuzzy isocontour width must be > 0, got " + std::to_string(width));
  }
  const auto v = f.values();
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(std::max(0.0, 1.0 - std::abs(v[i] - q) / width));
  }
  return ProbMask(f.grid(), std::move(out));
}

double default_fuzzy_width(const ScalarField& f) {
  const double w = 0.05 * f.range();
  if (!(w > 0.0)) throw InvalidArgument("constant field has no default fuzzy width; pass one");
  return w;
}

ProbMask normalize_density(const ScalarField& f, DensityNormalization mode) {
  const auto v = f.values();
  std::vector<float> out(v.size());
  if (mode == DensityNormalization::minmax) {
    const double span = f.range();
    if (!(span > 0.0)) throw DataError("minmax normalization of a constant field");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = static_cast<float>(std::clamp((v[i] - f.min()) / span, 0.0, 1.0));
    }
  } else {
    if (!(f.max() > 0.0)) throw DataError("scale-by-max normalization needs max > 0");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = static_cast<float>(std::clamp(v[i] / f.max(), 0.0, 1.0));
    }
  }
  return ProbMask(f.grid(), std::move(out));
}

}  // namespace fuzzdepth
