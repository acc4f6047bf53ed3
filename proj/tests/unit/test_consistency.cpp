#include <cmath>
#include <random>

#include "doctest.h"
#include "fuzzdepth/consistency.hpp"
#include "fuzzdepth/error.hpp"
#include "oracle.hpp"

using namespace fuzzdepth;

namespace {

DepthResult result_with_ranks(const std::vector<std::string>& ids, const std::vector<std::size_t>& rank) {
  DepthResult r;
  r.ids = ids;
  r.rank = rank;
  r.depth.resize(ids.size());
  r.in_in.resize(ids.size());
  r.in_out.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) r.depth[i] = 1.0 - static_cast<double>(rank[i]) / 100.0;
  return r;
}

}  // namespace

TEST_CASE("correlation examples") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{1, 2, 4, 3};
  CHECK(pearson(a, b) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(pearson(a, a) == 1.0);
  const std::vector<double> rev{4, 3, 2, 1};
  CHECK(pearson(a, rev) == -1.0);
  CHECK(kendall_tau(a, rev) == -1.0);
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 2, 3}), DataError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), DataError);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{2, 2, 2, 2}), DataError);
  CHECK_THROWS_AS(kendall_tau(a, std::vector<double>{2, 2, 2, 2}), DataError);
}

TEST_CASE("kendall tau-b with ties") {
  // x has one tied pair: C=4, D=1, untied x pairs 5, untied y pairs 6.
  const std::vector<double> x{1, 1, 2, 3};
  const std::vector<double> y{1, 2, 4, 3};
  CHECK(kendall_tau(x, y) == doctest::Approx(3.0 / std::sqrt(30.0)).epsilon(1e-15));
}

TEST_CASE("rank scatter joins by ID") {
  const DepthResult a = result_with_ranks({"a", "b", "c", "d"}, {0, 1, 2, 3});
  const DepthResult b = result_with_ranks({"d", "c", "b", "a"}, {3, 1, 2, 0});
  const RankScatter s = rank_scatter(a, b);
  CHECK(s.pearson == doctest::Approx(0.8).epsilon(1e-15));
  REQUIRE(s.rows.size() == 4);
  CHECK(s.rows[0].abs_delta == 1);
  CHECK(s.rows[1].abs_delta == 1);
  CHECK(s.rows[2].abs_delta == 0);
  CHECK(s.rows[0].id == "b");
  CHECK(s.rows[0].rank1 == 1);
  CHECK(s.rows[0].rank2 == 2);

  const RankScatter same = rank_scatter(a, a);
  CHECK(same.pearson == 1.0);
  CHECK(same.kendall == 1.0);

  CHECK_THROWS_AS(rank_scatter(a, result_with_ranks({"a", "b", "c", "x"}, {0, 1, 2, 3})), DataError);
  CHECK_THROWS_AS(rank_scatter(a, result_with_ranks({"a", "b", "c"}, {0, 1, 2})), DataError);
}

TEST_CASE("consistency matrix") {
  const DepthResult a = result_with_ranks({"a", "b", "c", "d"}, {0, 1, 2, 3});
  const DepthResult b = result_with_ranks({"a", "b", "c", "d"}, {0, 1, 3, 2});
  const DepthResult c = result_with_ranks({"a", "b", "c", "d"}, {3, 2, 1, 0});
  const auto m = consistency_matrix({a, b, c});
  REQUIRE(m.size() == 3);
  CHECK(m[0][0] == 1.0);
  CHECK(m[0][1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m[1][0] == m[0][1]);
  CHECK(m[0][2] == -1.0);
}

TEST_CASE("stability test") {
  const Ensemble e = oracle::nested_fixture();
  const StabilityReport none = stability_test(e, DepthMethod::eid, 0);
  CHECK_FALSE(none.degenerate);
  CHECK(none.pearson == 1.0);
  CHECK(none.kendall == 1.0);
  CHECK(none.removed_ids.empty());
  CHECK(none.n == 3);

  const StabilityReport one = stability_test(e, DepthMethod::pid, 1);
  CHECK(one.removed_ids.size() == 1);
  CHECK_FALSE(one.degenerate);

  const StabilityReport two = stability_test(e, DepthMethod::pid, 2);
  CHECK(two.degenerate);
  CHECK(std::isnan(two.pearson));
  CHECK_FALSE(two.note.empty());

  CHECK_THROWS_AS(stability_test(e, DepthMethod::pid, 3), InvalidArgument);

  GridSpec g({2});
  const ProbMask m(g, {1, 0});
  const StabilityReport same = stability_test(Ensemble(g, {"a", "b", "c"}, {m, m, m}), DepthMethod::pid, 0);
  CHECK(same.pearson == 1.0);
}

TEST_CASE("property: symmetry and invariance under monotone transforms") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + trial % 30;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = unit(rng);
      y[i] = 0.5 * x[i] + unit(rng);
    }
    CHECK(pearson(x, y) == pearson(y, x));
    CHECK(kendall_tau(x, y) == kendall_tau(y, x));
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);

    std::vector<double> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = std::exp(3.0 * x[i]) + 7.0;
    CHECK(kendall_tau(fx, y) == doctest::Approx(kendall_tau(x, y)).epsilon(1e-12));
    std::vector<double> affine(n);
    for (std::size_t i = 0; i < n; ++i) affine[i] = 4.0 * x[i] - 2.0;
    CHECK(std::abs(pearson(affine, y) - r) <= 1e-12);
  }
}
