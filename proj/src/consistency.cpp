#include "fuzzdepth/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "fuzzdepth/error.hpp"

namespace fuzzdepth {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw DataError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw DataError(std::string(what) + ": needs at least two values");
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Maps b's member indices onto a's order. DataError if the ID sets differ.
std::vector<std::size_t> join_by_id(const DepthResult& a, const DepthResult& b) {
  if (a.size() != b.size()) {
    throw DataError("results cover different member sets (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + " members)");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < b.ids.size(); ++i) index.emplace(b.ids[i], i);
  std::vector<std::size_t> map(a.size());
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    auto it = index.find(a.ids[i]);
    if (it == index.end()) throw DataError("member '" + a.ids[i] + "' missing from second result");
    map[i] = it->second;
  }
  return map;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson: zero variance (all values tied)");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, "kendall_tau");
  // tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)); n0 - n1 counts pairs untied in
  // x, n0 - n2 pairs untied in y.
  long long concordant_minus_discordant = 0;
  long long untied_x = 0;
  long long untied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) throw DataError("kendall_tau: all values tied");
  const double tau = static_cast<double>(concordant_minus_discordant) /
                     std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
  return std::clamp(tau, -1.0, 1.0);
}

std::vector<double> to_doubles(std::span<const std::size_t> ranks) {
  return std::vector<double>(ranks.begin(), ranks.end());
}

RankScatter rank_scatter(const DepthResult& a, const DepthResult& b) {
  const auto map = join_by_id(a, b);
  RankScatter s;
  std::vector<double> r1(a.size()), r2(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t k1 = a.rank[i];
    const std::size_t k2 = b.rank[map[i]];
    s.rows.push_back({a.ids[i], k1, k2, k1 > k2 ? k1 - k2 : k2 - k1});
    r1[i] = static_cast<double>(k1);
    r2[i] = static_cast<double>(k2);
  }
  std::stable_sort(s.rows.begin(), s.rows.end(),
                   [](const RankScatterRow& p, const RankScatterRow& q) { return p.abs_delta > q.abs_delta; });
  s.pearson = pearson(r1, r2);
  s.kendall = kendall_tau(r1, r2);
  return s;
}

std::vector<std::vector<double>> consistency_matrix(const std::vector<DepthResult>& results) {
  const std::size_t k = results.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 1.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto map = join_by_id(results[a], results[b]);
      std::vector<double> r1(map.size()), r2(map.size());
      for (std::size_t i = 0; i < map.size(); ++i) {
        r1[i] = static_cast<double>(results[a].rank[i]);
        r2[i] = static_cast<double>(results[b].rank[map[i]]);
      }
      m[a][b] = m[b][a] = pearson(r1, r2);
    }
  }
  return m;
}

StabilityReport stability_test(const Ensemble& e, DepthMethod method, std::size_t k_remove,
                               const DepthOptions& options) {
  const std::size_t n = e.size();
  if (k_remove >= n) {
    throw InvalidArgument("stability_test: cannot remove " + std::to_string(k_remove) + " of " +
                          std::to_string(n) + " members");
  }
  StabilityReport report;
  report.method = method;
  report.n = n;

  const DepthResult full = compute_depth(e, method, options);
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < n; ++i) {
    if (full.rank[i] < n - k_remove) {
      survivors.push_back(i);
    }
  }
  for (std::size_t r = n - k_remove; r < n; ++r) report.removed_ids.push_back(e.ids()[full.index_of_rank(r)]);

  if (survivors.size() < 2) {
    report.degenerate = true;
    report.note = "degenerate: fewer than two members survive";
    report.pearson = report.kendall = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  // Survivors keep their relative order, so compacting old ranks to 0..m-1
  // is a sort by old rank.
  std::vector<std::size_t> by_old_rank(survivors);
  std::sort(by_old_rank.begin(), by_old_rank.end(),
            [&](std::size_t a, std::size_t b) { return full.rank[a] < full.rank[b]; });
  std::vector<double> old_rank(n, 0.0);
  for (std::size_t r = 0; r < by_old_rank.size(); ++r) old_rank[by_old_rank[r]] = static_cast<double>(r);

  const DepthResult reduced = compute_depth(e.subset(survivors), method, options);
  std::vector<double> x(survivors.size()), y(survivors.size());
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    x[s] = old_rank[survivors[s]];
    y[s] = static_cast<double>(reduced.rank[s]);
  }
  report.pearson = pearson(x, y);
  report.kendall = kendall_tau(x, y);
  return report;
}

}  // namespace fuzzdepth
