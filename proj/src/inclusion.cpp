#include "fuzzdepth/inclusion.hpp"

#include <algorithm>
#include <string>

#include "fuzzdepth/error.hpp"
#include "fuzzdepth/reduce.hpp"

namespace fuzzdepth {

namespace {

// Fused single pass: {sum w*u*v, sum w*u}.
template <class U, class V>
std::array<double, 2> overlap_and_mass(const GridSpec& grid, U u, V v) {
  if (grid.is_uniform()) {
    return reduce::sum_cells_fused<2>(grid.cell_count(), [&](std::size_t x, double* t) {
      const double a = u[x];
      t[0] = a * static_cast<double>(v[x]);
      t[1] = a;
    });
  }
  const auto w = grid.weights();
  return reduce::sum_cells_fused<2>(grid.cell_count(), [&](std::size_t x, double* t) {
    const double a = u[x];
    t[0] = w[x] * (a * static_cast<double>(v[x]));
    t[1] = w[x] * a;
  });
}

// Fused single pass: {sum w*min, sum w*u, sum w*v, sum w*max}.
template <class U, class V>
std::array<double, 4> min_and_masses(const GridSpec& grid, U u, V v) {
  if (grid.is_uniform()) {
    return reduce::sum_cells_fused<4>(grid.cell_count(), [&](std::size_t x, double* t) {
      const double a = u[x];
      const double b = v[x];
      t[0] = std::min(a, b);
      t[1] = a;
      t[2] = b;
      t[3] = std::max(a, b);
    });
  }
  const auto w = grid.weights();
  return reduce::sum_cells_fused<4>(grid.cell_count(), [&](std::size_t x, double* t) {
    const double a = u[x];
    const double b = v[x];
    t[0] = w[x] * std::min(a, b);
    t[1] = w[x] * a;
    t[2] = w[x] * b;
    t[3] = w[x] * std::max(a, b);
  });
}

double ratio_or_zero(const std::array<double, 2>& s) { return s[1] > 0.0 ? s[0] / s[1] : 0.0; }

double dice_from(const std::array<double, 4>& s) {
  const double denom = s[1] + s[2];
  if (!(denom > 0.0)) throw DataError("fuzzy_dice: both masks have zero mass");
  return 2.0 * s[0] / denom;
}

double iou_from(const std::array<double, 4>& s) {
  if (!(s[3] > 0.0)) throw DataError("prob_iou: both masks have zero mass");
  return s[0] / s[3];
}

void check_field(const GridSpec& grid, std::span<const double> field, const char* what) {
  if (field.size() != grid.cell_count()) {
    throw DataError(std::string(what) + ": field has " + std::to_string(field.size()) +
                    " cells, grid has " + std::to_string(grid.cell_count()));
  }
}

}  // namespace

double prob_inclusion(const ProbMask& u, const ProbMask& v) {
  require_same_grid(u.grid(), v.grid(), "prob_inclusion");
  return ratio_or_zero(overlap_and_mass(u.grid(), u.values(), v.values()));
}

double prob_inclusion(const ProbMask& u, std::span<const double> field) {
  check_field(u.grid(), field, "prob_inclusion");
  return ratio_or_zero(overlap_and_mass(u.grid(), u.values(), field));
}

double prob_inclusion(std::span<const double> field, const ProbMask& v) {
  check_field(v.grid(), field, "prob_inclusion");
  return ratio_or_zero(overlap_and_mass(v.grid(), field, v.values()));
}

double subset_epsilon(const BinaryMask& a, const BinaryMask& b) {
  require_same_grid(a.grid(), b.grid(), "subset_epsilon");
  const auto A = a.bits();
  const auto B = b.bits();
  const GridSpec& grid = a.grid();
  std::array<double, 2> s;  // {|A \ B|, |A|}
  if (grid.is_uniform()) {
    s = reduce::sum_cells_fused<2>(A.size(), [&](std::size_t x, double* t) {
      t[0] = (A[x] & (B[x] ^ 1u)) ? 1.0 : 0.0;
      t[1] = A[x] ? 1.0 : 0.0;
    });
  } else {
    const auto w = grid.weights();
    s = reduce::sum_cells_fused<2>(A.size(), [&](std::size_t x, double* t) {
      t[0] = (A[x] & (B[x] ^ 1u)) ? w[x] : 0.0;
      t[1] = A[x] ? w[x] : 0.0;
    });
  }
  if (!(s[1] > 0.0)) return 0.0;
  return 1.0 - s[0] / s[1];
}

double fuzzy_dice(const ProbMask& u, const ProbMask& v) {
  require_same_grid(u.grid(), v.grid(), "fuzzy_dice");
  return dice_from(min_and_masses(u.grid(), u.values(), v.values()));
}

double fuzzy_dice(const ProbMask& u, std::span<const double> field) {
  check_field(u.grid(), field, "fuzzy_dice");
  return dice_from(min_and_masses(u.grid(), u.values(), field));
}

double prob_iou(const ProbMask& u, const ProbMask& v) {
  require_same_grid(u.grid(), v.grid(), "prob_iou");
  return iou_from(min_and_masses(u.grid(), u.values(), v.values()));
}

double prob_iou(const ProbMask& u, std::span<const double> field) {
  check_field(u.grid(), field, "prob_iou");
  return iou_from(min_and_masses(u.grid(), u.values(), field));
}

}  // namespace fuzzdepth
