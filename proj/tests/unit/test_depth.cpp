#include <cmath>
#include <random>

#include "doctest.h"
#include "fuzzdepth/consistency.hpp"
#include "fuzzdepth/depth.hpp"
#include "fuzzdepth/error.hpp"
#include "fuzzdepth/synth.hpp"
#include "oracle.hpp"

using namespace fuzzdepth;

namespace {

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

void check_result_invariants(const DepthResult& r) {
  std::vector<char> seen(r.size(), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.depth[i] == std::min(r.in_in[i], r.in_out[i]));
    CHECK(r.depth[i] >= 0.0);
    CHECK(r.depth[i] <= 1.0 + 1e-15);
    REQUIRE(r.rank[i] < r.size());
    CHECK_FALSE(seen[r.rank[i]]);
    seen[r.rank[i]] = 1;
  }
  for (std::size_t k = 1; k < r.size(); ++k) {
    const std::size_t a = r.index_of_rank(k - 1);
    const std::size_t b = r.index_of_rank(k);
    CHECK((r.depth[a] > r.depth[b] || (r.depth[a] == r.depth[b] && a < b)));
  }
}

Ensemble constant_ensemble(const ProbMask& u, std::size_t n) {
  std::vector<ProbMask> m(n, u);
  return Ensemble(std::move(m));
}

}  // namespace

TEST_CASE("method names") {
  for (DepthMethod m : {DepthMethod::eid, DepthMethod::pid, DepthMethod::pid_mean, DepthMethod::dice, DepthMethod::iou}) {
    CHECK(parse_depth_method(to_string(m)) == m);
  }
  CHECK(to_string(DepthMethod::pid_mean) == "pid-mean");
  CHECK_THROWS_AS(parse_depth_method("cbd"), InvalidArgument);
}

TEST_CASE("ranking ties go to the lower index") {
  CHECK(rank_by_depth({0.5, 0.7, 0.5, 0.7}) == std::vector<std::size_t>{2, 0, 3, 1});
  CHECK(rank_by_depth({1.0}) == std::vector<std::size_t>{0});
}

TEST_CASE("mass coefficient of variation") {
  CHECK(mass_cv({2.0, 2.0, 2.0}) == 0.0);
  CHECK(mass_cv({1.0, 9.0}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mass_cv({0.0, 0.0}) == 0.0);
}

TEST_CASE("eID on the nested fixture") {
  const DepthResult r = depth_eid(oracle::nested_fixture());
  check_close(r.depth, {11.0 / 18.0, 5.0 / 6.0, 2.0 / 3.0}, 1e-15);
  check_close(r.in_in, {1.0, 5.0 / 6.0, 2.0 / 3.0}, 1e-15);
  check_close(r.in_out, {11.0 / 18.0, 8.0 / 9.0, 1.0}, 1e-15);
  CHECK(r.rank == std::vector<std::size_t>{2, 0, 1});
  CHECK(r.ids == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK(r.method == DepthMethod::eid);
  check_result_invariants(r);
}

TEST_CASE("eID trivial ensembles and errors") {
  GridSpec g({3, 3});
  const ProbMask b(g, {0, 1, 1, 0, 1, 0, 0, 0, 1});
  CHECK(depth_eid(constant_ensemble(b, 1)).depth == std::vector<double>{1.0});
  for (double d : depth_eid(constant_ensemble(b, 5)).depth) CHECK(d == 1.0);
  const ProbMask fuzzy(g, {0, 0.5f, 1, 0, 1, 0, 0, 0, 1});
  CHECK_THROWS_AS(depth_eid(Ensemble({b, fuzzy})), DataError);
}

TEST_CASE("PID on the nested fixture and the fuzzy pair") {
  const DepthResult r = depth_pid(oracle::nested_fixture());
  check_close(r.depth, {11.0 / 18.0, 5.0 / 6.0, 2.0 / 3.0}, 1e-15);
  CHECK(r.rank == std::vector<std::size_t>{2, 0, 1});

  // Cross terms are 0.5 each; self terms are 0.5 for the fuzzy mask
  // (sum u^2 / sum u) and 1 for the crisp one.
  GridSpec g({2});
  const DepthResult p = depth_pid(Ensemble({ProbMask(g, {0.5f, 0.5f}), ProbMask(g, {1, 0})}));
  check_close(p.in_in, {0.5, 0.75}, 1e-15);
  check_close(p.in_out, {0.5, 0.75}, 1e-15);
  check_close(p.depth, {0.5, 0.75}, 1e-15);
  CHECK(p.rank == std::vector<std::size_t>{1, 0});
}

TEST_CASE("PID gives zero-mass members depth 0") {
  GridSpec g({3});
  const DepthResult r = depth_pid(Ensemble({ProbMask(g, {1, 1, 0}), ProbMask(g, {0, 0, 0}), ProbMask(g, {1, 0, 0})}));
  CHECK(r.depth[1] == 0.0);
  CHECK(r.rank[1] == 2);
}

TEST_CASE("PID-mean on the nested fixture") {
  const DepthResult m = depth_pid_mean(oracle::nested_fixture());
  check_close(m.in_in, {1.0, 5.0 / 6.0, 2.0 / 3.0}, 1e-15);
  check_close(m.in_out, {0.5, 5.0 / 6.0, 1.0}, 1e-15);
  CHECK(m.rank[1] == 0);
  const DepthResult p = depth_pid(oracle::nested_fixture());
  CHECK(std::abs(p.in_out[1] - m.in_out[1]) == doctest::Approx(1.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("PID-mean trivial ensembles and diagnostics") {
  GridSpec g({4});
  const ProbMask u(g, {0.2f, 1, 0.7f, 0});
  const DepthResult same = depth_pid_mean(constant_ensemble(u, 6));
  const double self = oracle::inclusion(oracle::values_of(u), oracle::values_of(u), oracle::weights_of(g));
  for (double d : same.depth) CHECK(d == doctest::Approx(self).epsilon(1e-15));
  CHECK(same.cv_mass == 0.0);
  CHECK(same.warnings.empty());

  CHECK_THROWS_AS(depth_pid_mean(constant_ensemble(ProbMask::constant(g, 0.0f), 3)), DataError);

  GridSpec big({10});
  const ProbMask small(big, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const ProbMask large(big, {1, 1, 1, 1, 1, 1, 1, 1, 1, 0});
  const DepthResult spread = depth_pid_mean(Ensemble({small, large}));
  CHECK(spread.cv_mass == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(spread.warnings.size() == 1);
  DepthOptions quiet;
  quiet.cv_warning_threshold = 0.9;
  CHECK(depth_pid_mean(Ensemble({small, large}), quiet).warnings.empty());
}

TEST_CASE("compare_pid_vs_mean") {
  // c1 moves from 11/18 to 1/2; the ranks are unchanged.
  const PidMeanComparison c = compare_pid_vs_mean(oracle::nested_fixture());
  CHECK(c.max_abs_error == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(c.mean_abs_error == doctest::Approx(1.0 / 27.0).epsilon(1e-12));
  CHECK(c.pid.rank == c.pid_mean.rank);
  CHECK(c.rank_pearson == 1.0);
  CHECK(c.rank_kendall == 1.0);

  GridSpec g({3});
  const PidMeanComparison same = compare_pid_vs_mean(constant_ensemble(ProbMask(g, {0.5f, 1, 0}), 4));
  CHECK(same.max_abs_error <= 1e-15);
  CHECK(same.rank_pearson == 1.0);
  CHECK(same.rank_kendall == 1.0);

  CHECK_THROWS_AS(compare_pid_vs_mean(Ensemble({ProbMask(g, {1, 0, 0})})), InvalidArgument);
}

TEST_CASE("PID-mean ranks track PID on a 200-member disk ensemble") {
  const Ensemble e = gen_disk_ensemble(200, 48, 3);
  const PidMeanComparison c = compare_pid_vs_mean(e);
  CHECK(c.rank_pearson >= 0.95);
  MESSAGE("disk ensemble: rank pearson " << c.rank_pearson << ", kendall " << c.rank_kendall
                                         << ", cv " << c.cv_mass << ", max |err| " << c.max_abs_error);
}

TEST_CASE("similarity baselines") {
  GridSpec g({4});
  for (DepthMethod m : {DepthMethod::dice, DepthMethod::iou}) {
    for (double d : compute_depth(constant_ensemble(ProbMask(g, {0.1f, 1, 0.3f, 0}), 3), m).depth) {
      CHECK(d == 1.0);
    }
  }
  GridSpec two({2});
  const DepthResult r = depth_similarity_baseline(Ensemble({ProbMask(two, {1, 0}), ProbMask(two, {0, 1})}),
                                                  SimilarityMeasure::prob_iou);
  check_close(r.depth, {1.0 / 3.0, 1.0 / 3.0}, 1e-15);
  CHECK(r.rank == std::vector<std::size_t>{0, 1});
  CHECK(r.in_in == r.in_out);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    GridSpec rg = oracle::random_grid(rng, {9, 7}, trial % 2 == 0);
    const Ensemble e = oracle::random_ensemble(rng, rg, 12, oracle::random_fuzzy);
    CHECK(depth_similarity_baseline(e, SimilarityMeasure::fuzzy_dice).rank ==
          depth_similarity_baseline(e, SimilarityMeasure::prob_iou).rank);
  }
}

TEST_CASE("PID and eID match the naive oracle across tile and chunk boundaries") {
  std::mt19937_64 rng(22);
  struct Shape {
    std::size_t n;
    std::vector<std::size_t> dims;
    bool weighted;
  };
  // Member counts straddle the 32-member tile and the 4-member register
  // block; 70000 cells cross a 65536-cell chunk and end mid-leaf.
  const std::vector<Shape> shapes{{1, {5}, false},        {3, {300}, true},        {33, {17, 13}, false},
                                  {37, {11, 11}, true},   {65, {9, 7}, false},    {5, {70000}, false},
                                  {6, {70000}, true},     {70, {2, 3, 4, 5}, true}};
  for (const Shape& s : shapes) {
    CAPTURE(s.n);
    const GridSpec g = oracle::random_grid(rng, s.dims, s.weighted);
    const Ensemble fuzzy = oracle::random_ensemble(rng, g, s.n, oracle::random_fuzzy);
    const auto want = oracle::pid(oracle::members_of(fuzzy), oracle::weights_of(g));
    const DepthResult got = depth_pid(fuzzy);
    check_close(got.in_in, want.in_in, 1e-12);
    check_close(got.in_out, want.in_out, 1e-12);
    check_close(got.depth, want.depth, 1e-12);
    check_result_invariants(got);

    const Ensemble crisp = oracle::random_ensemble(rng, g, s.n, oracle::random_binary);
    const auto want_eid = oracle::eid(oracle::members_of(crisp), oracle::weights_of(g));
    const DepthResult eid = depth_eid(crisp);
    check_close(eid.depth, want_eid.depth, 1e-12);
    check_close(depth_pid(crisp).depth, eid.depth, 1e-12);
  }
}

TEST_CASE("results are identical for every worker count") {
  std::mt19937_64 rng(23);
  const GridSpec g = oracle::random_grid(rng, {40, 40, 3}, true);
  const Ensemble fuzzy = oracle::random_ensemble(rng, g, 70, oracle::random_fuzzy);
  const Ensemble crisp = binarize(fuzzy, 0.5);
  for (DepthMethod m : {DepthMethod::pid, DepthMethod::pid_mean, DepthMethod::dice, DepthMethod::iou,
                        DepthMethod::eid}) {
    const Ensemble& e = m == DepthMethod::eid ? crisp : fuzzy;
    DepthOptions one, many;
    many.workers = 4;
    const DepthResult a = compute_depth(e, m, one);
    const DepthResult b = compute_depth(e, m, many);
    CHECK(a.in_in == b.in_in);
    CHECK(a.in_out == b.in_out);
    CHECK(a.rank == b.rank);
  }
}

TEST_CASE("lazy and resident ensembles give identical results") {
  std::mt19937_64 rng(24);
  const GridSpec g({12, 12});
  const Ensemble e = oracle::random_ensemble(rng, g, 9, oracle::random_fuzzy);
  std::vector<Ensemble::Loader> loaders;
  for (std::size_t i = 0; i < e.size(); ++i) loaders.push_back([e, i] { return e.member(i); });
  const Ensemble lazy = Ensemble::lazy(g, e.ids(), loaders);
  CHECK(depth_pid(lazy).depth == depth_pid(e).depth);
  CHECK(depth_pid_mean(lazy).depth == depth_pid_mean(e).depth);
}

TEST_CASE("depth is invariant under a consistent cell permutation") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const GridSpec g = oracle::random_grid(rng, {10, 9, 8}, trial % 2 == 0);
    const Ensemble e = oracle::random_ensemble(rng, g, 15, oracle::random_fuzzy);
    const Ensemble p = permute_cells(e, oracle::random_permutation(rng, g.cell_count()));
    for (DepthMethod m : {DepthMethod::pid, DepthMethod::pid_mean}) {
      const DepthResult a = compute_depth(e, m);
      const DepthResult b = compute_depth(p, m);
      check_close(a.depth, b.depth, 1e-12);
      CHECK(a.rank == b.rank);
    }
  }
}

TEST_CASE("member order equivariance") {
  std::mt19937_64 rng(26);
  const GridSpec g({14, 14});
  const Ensemble e = oracle::random_ensemble(rng, g, 20, oracle::random_fuzzy);
  const auto order = oracle::random_permutation(rng, e.size());
  const Ensemble shuffled = e.subset(order);
  const DepthResult a = depth_pid(e);
  const DepthResult b = depth_pid(shuffled);
  for (std::size_t k = 0; k < order.size(); ++k) {
    CHECK(std::abs(b.depth[k] - a.depth[order[k]]) <= 1e-12);
    CHECK(b.rank[k] == a.rank[order[k]]);
  }

  // Ties re-resolve by the new positions.
  const ProbMask u(g, std::vector<float>(g.cell_count(), 0.5f));
  const Ensemble tied(g, {"x", "y", "z"}, {u, u, u});
  const std::vector<std::size_t> reversed{2, 1, 0};
  const DepthResult t = depth_pid(tied.subset(reversed));
  CHECK(t.ids == std::vector<std::string>{"z", "y", "x"});
  CHECK(t.rank == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("PID depth is robust under bounded perturbations") {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const Ensemble e = gen_disk_ensemble(24, 32, seed);
    const double delta = 0.01;
    std::vector<ProbMask> moved;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto v = e.member(i).values();
      std::vector<double> w(v.size());
      for (std::size_t x = 0; x < v.size(); ++x) w[x] = std::clamp(v[x] + delta * unit(rng), 0.0, 1.0);
      moved.push_back(ProbMask::from_doubles(e.grid(), w));
    }
    const DepthResult a = depth_pid(e);
    const DepthResult b = depth_pid(Ensemble(e.grid(), e.ids(), moved));
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(a.depth[i] - b.depth[i]) / delta);
  }
  MESSAGE("measured Lipschitz constant " << worst);
  CHECK(worst <= 3.0);
}
