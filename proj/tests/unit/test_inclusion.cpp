#include <cmath>
#include <random>

#include "doctest.h"
#include "fuzzdepth/error.hpp"
#include "fuzzdepth/inclusion.hpp"
#include "oracle.hpp"

using namespace fuzzdepth;

TEST_CASE("prob_inclusion examples") {
  GridSpec g({4});
  CHECK(prob_inclusion(ProbMask(g, {1, 1, 0, 0}), ProbMask(g, {1, 0, 1, 0})) == 0.5);
  CHECK(prob_inclusion(ProbMask(g, {0.3f, 0.0f, 0.9f, 0.1f}), ProbMask::constant(g, 1.0f)) == 1.0);
  GridSpec w({2}, {3.0, 1.0});
  CHECK(prob_inclusion(ProbMask(w, {1, 1}), ProbMask(w, {1, 0})) == 0.75);
  CHECK(prob_inclusion(ProbMask::constant(g, 0.0f), ProbMask(g, {1, 0, 1, 0})) == 0.0);
  CHECK_THROWS_AS(prob_inclusion(ProbMask(g, {1, 1, 0, 0}), ProbMask(GridSpec({2, 2}), {1, 1, 0, 0})),
                  DataError);
}

TEST_CASE("subset_epsilon examples") {
  GridSpec g({4});
  CHECK(subset_epsilon(BinaryMask(g, {1, 1, 0, 0}), BinaryMask(g, {0, 1, 1, 0})) == 0.5);
  CHECK(subset_epsilon(BinaryMask(g, {0, 1, 0, 0}), BinaryMask(g, {1, 1, 1, 0})) == 1.0);
  CHECK(subset_epsilon(BinaryMask(g, {1, 1, 0, 0}), BinaryMask(g, {0, 0, 1, 1})) == 0.0);
  CHECK(subset_epsilon(BinaryMask(g, {0, 0, 0, 0}), BinaryMask(g, {0, 0, 1, 1})) == 0.0);
  CHECK_THROWS_AS(subset_epsilon(BinaryMask(g, {1, 0, 0, 0}), BinaryMask(GridSpec({5}), {1, 0, 0, 0, 0})),
                  DataError);
}

TEST_CASE("fuzzy_dice and prob_iou examples") {
  GridSpec g({2});
  const ProbMask u(g, {1, 0});
  const ProbMask v(g, {1, 1});
  CHECK(fuzzy_dice(u, v) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(prob_iou(u, v) == 0.5);
  CHECK(fuzzy_dice(v, v) == 1.0);
  CHECK(prob_iou(v, v) == 1.0);
  CHECK(fuzzy_dice(u, ProbMask(g, {0, 1})) == 0.0);
  CHECK(prob_iou(u, ProbMask(g, {0, 1})) == 0.0);
  const ProbMask zero = ProbMask::constant(g, 0.0f);
  CHECK_THROWS_AS(fuzzy_dice(zero, zero), DataError);
  CHECK_THROWS_AS(prob_iou(zero, zero), DataError);
}

TEST_CASE("operators against a double field") {
  GridSpec g({4});
  const ProbMask u(g, {1, 1, 0, 0});
  const std::vector<double> mean{1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0};
  CHECK(prob_inclusion(u, mean) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(prob_inclusion(mean, u) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK_THROWS_AS(prob_inclusion(u, std::vector<double>{1.0}), DataError);
}

TEST_CASE("asymmetry witness") {
  GridSpec g({4});
  const ProbMask small(g, {1, 0, 0, 0});
  const ProbMask large(g, {1, 1, 1, 1});
  CHECK(prob_inclusion(small, large) == 1.0);
  CHECK(prob_inclusion(large, small) == 0.25);
}

namespace {

struct Case {
  GridSpec grid;
  ProbMask u;
  ProbMask v;
};

Case random_case(std::mt19937_64& rng, int trial) {
  std::uniform_int_distribution<std::size_t> side(1, 24);
  GridSpec g = oracle::random_grid(rng, {side(rng), side(rng)}, trial % 2 == 1);
  return {g, oracle::random_fuzzy(rng, g), oracle::random_fuzzy(rng, g)};
}

std::vector<double> as_double(const ProbMask& u) { return oracle::values_of(u); }

}  // namespace

TEST_CASE("property: range, oracle agreement and binary reduction (1000 cases)") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng, trial);
    const double p = prob_inclusion(c.u, c.v);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(std::abs(p - oracle::inclusion(as_double(c.u), as_double(c.v), oracle::weights_of(c.grid))) <= 1e-12);

    const BinaryMask a = binarize(c.u, 0.5);
    const BinaryMask b = binarize(c.v, 0.5);
    CHECK(std::abs(prob_inclusion(a.to_prob(), b.to_prob()) - subset_epsilon(a, b)) <= 1e-12);
  }
}

TEST_CASE("property: scale invariance in u (1000 cases)") {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> alpha(0.01, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng, trial);
    const double a = alpha(rng);
    const auto u = as_double(c.u);
    std::vector<double> scaled(u.size());
    for (std::size_t x = 0; x < u.size(); ++x) scaled[x] = a * u[x];
    // The scaled mask is evaluated at double precision so the check isolates
    // the operator from float storage rounding.
    const double p = prob_inclusion(c.u, c.v);
    const double ps = prob_inclusion(scaled, c.v);
    CHECK(std::abs(p - ps) <= 1e-12 * std::max(1.0, std::abs(p)));
  }
}

TEST_CASE("property: linearity, monotonicity and Lipschitz bound in v (1000 cases)") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng, trial);
    const ProbMask w = oracle::random_fuzzy(rng, c.grid);
    const auto v = as_double(c.v);
    const auto wv = as_double(w);

    // Linearity: a*v + b*w with a, b >= 0 and a + b <= 1.
    const double a = unit(rng);
    const double b = (1.0 - a) * unit(rng);
    std::vector<double> mix(v.size());
    for (std::size_t x = 0; x < v.size(); ++x) mix[x] = a * v[x] + b * wv[x];
    const double lhs = prob_inclusion(c.u, mix);
    const double rhs = a * prob_inclusion(c.u, c.v) + b * prob_inclusion(c.u, w);
    CHECK(std::abs(lhs - rhs) <= 1e-12);

    // Monotonicity: v <= v' pointwise.
    std::vector<double> larger(v.size());
    for (std::size_t x = 0; x < v.size(); ++x) larger[x] = v[x] + (1.0 - v[x]) * unit(rng);
    CHECK(prob_inclusion(c.u, c.v) <= prob_inclusion(c.u, larger) + 1e-12);

    // Lipschitz in v with constant 1 in the sup norm.
    const double delta = 0.2 * unit(rng);
    std::vector<double> moved(v.size());
    double sup = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) {
      moved[x] = std::clamp(v[x] + delta * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
      sup = std::max(sup, std::abs(moved[x] - v[x]));
    }
    CHECK(std::abs(prob_inclusion(c.u, c.v) - prob_inclusion(c.u, moved)) <= sup + 1e-12);
  }
}

TEST_CASE("property: Dice and IoU identity and symmetry (1000 cases)") {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng, trial);
    if (mask_mass(c.u) == 0.0 && mask_mass(c.v) == 0.0) continue;
    const double d = fuzzy_dice(c.u, c.v);
    const double j = prob_iou(c.u, c.v);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(std::abs(j - d / (2.0 - d)) <= 1e-12);
    CHECK(fuzzy_dice(c.v, c.u) == d);
    CHECK(prob_iou(c.v, c.u) == j);
  }
}

TEST_CASE("property: u-side perturbation changes inclusion boundedly") {
  // No fixed constant: the bound depends on m(u). Check the change shrinks
  // with the perturbation size relative to the mass.
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    GridSpec g({20, 20});
    const ProbMask u = oracle::random_fuzzy(rng, g);
    const ProbMask v = oracle::random_fuzzy(rng, g);
    const double m = mask_mass(u);
    if (m < 10.0) continue;
    const double delta = 0.05 * unit(rng);
    std::vector<double> moved(u.size());
    for (std::size_t x = 0; x < u.size(); ++x) {
      moved[x] = std::clamp(static_cast<double>(u[x]) + delta * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
    }
    const double change = std::abs(prob_inclusion(u, v) - prob_inclusion(moved, v));
    CHECK(change <= 2.0 * delta * static_cast<double>(g.cell_count()) / m + 1e-12);
  }
}

TEST_CASE("coordinate invariance under a simultaneous cell permutation") {
  std::mt19937_64 rng(106);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng, trial);
    const auto perm = oracle::random_permutation(rng, c.grid.cell_count());
    const GridSpec pg = permute_cells(c.grid, perm);
    const ProbMask pu = permute_cells(c.u, pg, perm);
    const ProbMask pv = permute_cells(c.v, pg, perm);
    // The fixed reduction order follows cell indices, so a permutation
    // reorders the additions; agreement is to rounding, not bitwise.
    CHECK(std::abs(prob_inclusion(c.u, c.v) - prob_inclusion(pu, pv)) <= 1e-12);
  }
}
