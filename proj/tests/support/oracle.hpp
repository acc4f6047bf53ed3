#pragma once

// Naive reference implementations and random fixtures for tests. Everything
// here is deliberately simple: plain loops, plain summation, no tiling.

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "fuzzdepth/grid.hpp"

namespace oracle {

using Field = std::vector<double>;

inline Field values_of(const fuzzdepth::ProbMask& u) { return Field(u.values().begin(), u.values().end()); }

inline Field weights_of(const fuzzdepth::GridSpec& g) {
  return g.is_uniform() ? Field(g.cell_count(), 1.0) : Field(g.weights().begin(), g.weights().end());
}

inline std::vector<Field> members_of(const fuzzdepth::Ensemble& e) {
  std::vector<Field> out;
  for (std::size_t i = 0; i < e.size(); ++i) out.push_back(values_of(e.member(i)));
  return out;
}

inline double inclusion(const Field& u, const Field& v, const Field& w) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t x = 0; x < u.size(); ++x) {
    num += w[x] * u[x] * v[x];
    den += w[x] * u[x];
  }
  return den > 0.0 ? num / den : 0.0;
}

// 1 - |A \ B| / |A| counted directly on the sets.
inline double subset_eps(const Field& a, const Field& b, const Field& w) {
  double size_a = 0.0;
  double diff = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    if (a[x] != 0.0) {
      size_a += w[x];
      if (b[x] == 0.0) diff += w[x];
    }
  }
  return size_a > 0.0 ? 1.0 - diff / size_a : 0.0;
}

struct Depths {
  std::vector<double> in_in;
  std::vector<double> in_out;
  std::vector<double> depth;
};

template <class Op>
Depths pairwise(const std::vector<Field>& m, const Field& w, Op op) {
  const std::size_t n = m.size();
  Depths d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d.in_in[i] += op(m[i], m[j], w);
      d.in_out[i] += op(m[j], m[i], w);
    }
    d.in_in[i] /= static_cast<double>(n);
    d.in_out[i] /= static_cast<double>(n);
    d.depth[i] = d.in_in[i] < d.in_out[i] ? d.in_in[i] : d.in_out[i];
  }
  return d;
}

inline Depths pid(const std::vector<Field>& m, const Field& w) { return pairwise(m, w, inclusion); }
inline Depths eid(const std::vector<Field>& m, const Field& w) { return pairwise(m, w, subset_eps); }

// Random fixtures ------------------------------------------------------------

inline fuzzdepth::GridSpec random_grid(std::mt19937_64& rng, std::vector<std::size_t> dims, bool weighted) {
  if (!weighted) return fuzzdepth::GridSpec(std::move(dims));
  std::size_t cells = 1;
  for (std::size_t d : dims) cells *= d;
  std::uniform_real_distribution<double> wd(0.1, 3.0);
  std::vector<double> w(cells);
  for (auto& x : w) x = wd(rng);
  return fuzzdepth::GridSpec(std::move(dims), std::move(w));
}

// Fuzzy mask with a mix of exact zeros, exact ones and fractional values.
inline fuzzdepth::ProbMask random_fuzzy(std::mt19937_64& rng, const fuzzdepth::GridSpec& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p_zero = 0.4 * u(rng);
  const double p_one = 0.3 * u(rng);
  std::vector<float> v(g.cell_count());
  for (auto& x : v) {
    const double r = u(rng);
    x = r < p_zero ? 0.0f : r < p_zero + p_one ? 1.0f : static_cast<float>(u(rng));
  }
  return fuzzdepth::ProbMask(g, std::move(v));
}

inline fuzzdepth::ProbMask random_binary(std::mt19937_64& rng, const fuzzdepth::GridSpec& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = 0.1 + 0.8 * u(rng);
  std::vector<float> v(g.cell_count());
  for (auto& x : v) x = u(rng) < p ? 1.0f : 0.0f;
  return fuzzdepth::ProbMask(g, std::move(v));
}

template <class Make>
fuzzdepth::Ensemble random_ensemble(std::mt19937_64& rng, const fuzzdepth::GridSpec& g, std::size_t n, Make make) {
  std::vector<std::string> ids;
  std::vector<fuzzdepth::ProbMask> members;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("m" + std::to_string(i));
    members.push_back(make(rng, g));
  }
  return fuzzdepth::Ensemble(g, std::move(ids), std::move(members));
}

inline fuzzdepth::Ensemble nested_fixture() {
  fuzzdepth::GridSpec g({4});
  return fuzzdepth::Ensemble(g, {"c1", "c2", "c3"},
                             {fuzzdepth::ProbMask(g, {1, 0, 0, 0}), fuzzdepth::ProbMask(g, {1, 1, 0, 0}),
                              fuzzdepth::ProbMask(g, {1, 1, 1, 0})});
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace oracle
