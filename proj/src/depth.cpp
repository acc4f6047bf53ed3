#include "fuzzdepth/depth.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <numeric>
#include <string>

#include "fuzzdepth/consistency.hpp"
#include "fuzzdepth/error.hpp"
#include "fuzzdepth/inclusion.hpp"
#include "fuzzdepth/parallel.hpp"
#include "fuzzdepth/reduce.hpp"

namespace fuzzdepth {

using reduce::kChunkCells;
using reduce::kLanes;
using reduce::kLeafCells;

std::string_view to_string(DepthMethod method) {
  switch (method) {
    case DepthMethod::eid: return "eid";
    case DepthMethod::pid: return "pid";
    case DepthMethod::pid_mean: return "pid-mean";
    case DepthMethod::dice: return "dice";
    case DepthMethod::iou: return "iou";
  }
  return "unknown";
}

DepthMethod parse_depth_method(std::string_view name) {
  if (name == "eid") return DepthMethod::eid;
  if (name == "pid") return DepthMethod::pid;
  if (name == "pid-mean" || name == "pid_mean") return DepthMethod::pid_mean;
  if (name == "dice" || name == "fuzzy-dice") return DepthMethod::dice;
  if (name == "iou" || name == "prob-iou") return DepthMethod::iou;
  throw InvalidArgument("unknown depth method '" + std::string(name) + "'");
}

std::size_t DepthResult::index_of_rank(std::size_t r) const {
  for (std::size_t i = 0; i < rank.size(); ++i) {
    if (rank[i] == r) return i;
  }
  throw InvalidArgument("rank " + std::to_string(r) + " out of range");
}

std::vector<std::size_t> rank_by_depth(const std::vector<double>& depth) {
  std::vector<std::size_t> order(depth.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });
  std::vector<std::size_t> rank(depth.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

double mass_cv(const std::vector<double>& masses) {
  if (masses.empty()) return 0.0;
  const double n = static_cast<double>(masses.size());
  double mean = 0.0;
  for (double m : masses) mean += m;
  mean /= n;
  if (!(mean > 0.0)) return 0.0;
  double var = 0.0;
  for (double m : masses) var += (m - mean) * (m - mean);
  return std::sqrt(var / n) / mean;
}

namespace {

using Clock = std::chrono::steady_clock;

// Members per tile of the pairwise loops. Fixed so that the order in which
// inclusions are folded into IN_in / IN_out never depends on the worker count.
constexpr std::size_t kPairTile = 32;

void require_members(const Ensemble& e) {
  if (e.size() == 0) throw DataError("ensemble has no members");
}

std::vector<double> member_masses(const Ensemble& e, std::size_t workers) {
  std::vector<double> m(e.size());
  parallel_for(e.size(), workers, [&](std::size_t i) { m[i] = mask_mass(e.member(i)); });
  return m;
}

void finish(DepthResult& r, const Ensemble& e, DepthMethod method, const DepthOptions& options,
            Clock::time_point start) {
  r.ids = e.ids();
  r.method = method;
  r.depth.resize(r.in_in.size());
  for (std::size_t i = 0; i < r.depth.size(); ++i) r.depth[i] = std::min(r.in_in[i], r.in_out[i]);
  r.rank = rank_by_depth(r.depth);
  r.workers = options.workers;
  r.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

struct Tile {
  std::size_t begin = 0;
  std::vector<ProbMask> masks;
};

Tile load_tile(const Ensemble& e, std::size_t tile) {
  Tile t;
  t.begin = tile * kPairTile;
  const std::size_t end = std::min(e.size(), t.begin + kPairTile);
  for (std::size_t i = t.begin; i < end; ++i) t.masks.push_back(e.member(i));
  return t;
}

// Runs kernel(A, B, diagonal, incl_ab, incl_ba) over every tile pair A <= B.
// incl_ab[i*|B|+j] must receive member (A.begin+i) ⊂ member (B.begin+j) and
// incl_ba the reverse direction. Row and column sums are accumulated per tile
// and folded in ascending tile order.
template <class Kernel>
void pairwise_inclusion_sums(const Ensemble& e, std::size_t workers, Kernel&& kernel,
                             std::vector<double>& in_in, std::vector<double>& in_out) {
  const std::size_t n = e.size();
  const std::size_t tiles = (n + kPairTile - 1) / kPairTile;
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t a = 0; a < tiles; ++a) {
    for (std::size_t b = a; b < tiles; ++b) tasks.emplace_back(a, b);
  }
  // part_in[t*n + i] = sum over j in tile t of incl(i, j); part_out likewise
  // for incl(j, i).
  std::vector<double> part_in(tiles * n, 0.0);
  std::vector<double> part_out(tiles * n, 0.0);

  parallel_for(tasks.size(), workers, [&](std::size_t task) {
    const auto [ta, tb] = tasks[task];
    const Tile A = load_tile(e, ta);
    const Tile B = ta == tb ? Tile{} : load_tile(e, tb);
    const Tile& Bref = ta == tb ? A : B;
    const std::size_t na = A.masks.size();
    const std::size_t nb = Bref.masks.size();
    std::vector<double> incl_ab(na * nb, 0.0);
    std::vector<double> incl_ba(na * nb, 0.0);
    kernel(A, Bref, ta == tb, incl_ab.data(), incl_ba.data());

    for (std::size_t i = 0; i < na; ++i) {
      double s_in = 0.0;
      double s_out = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        s_in += incl_ab[i * nb + j];
        s_out += incl_ba[i * nb + j];
      }
      part_in[tb * n + A.begin + i] = s_in;
      part_out[tb * n + A.begin + i] = s_out;
    }
    if (ta != tb) {
      for (std::size_t j = 0; j < nb; ++j) {
        double s_in = 0.0;
        double s_out = 0.0;
        for (std::size_t i = 0; i < na; ++i) {
          s_in += incl_ba[i * nb + j];
          s_out += incl_ab[i * nb + j];
        }
        part_in[ta * n + Bref.begin + j] = s_in;
        part_out[ta * n + Bref.begin + j] = s_out;
      }
    }
  });

  in_in.assign(n, 0.0);
  in_out.assign(n, 0.0);
  const double count = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s_in = 0.0;
    double s_out = 0.0;
    for (std::size_t t = 0; t < tiles; ++t) {
      s_in += part_in[t * n + i];
      s_out += part_out[t * n + i];
    }
    in_in[i] = s_in / count;
    in_out[i] = s_out / count;
  }
}

// Leaf sums for every pair of a tile, combined exactly like reduce::ChunkedSum.
// The binary-counter merge pattern depends only on the leaf position, so it
// is tracked once and applied to all pairs in contiguous passes.
class PairSums {
 public:
  explicit PairSums(std::size_t pairs)
      : pairs_(pairs), leaf_(pairs), stack_(kMaxLevels * pairs), total_(pairs, 0.0) {}

  /// Slot for the current leaf's per-pair sums.
  double* leaf() { return leaf_.data(); }

  void push_leaf() {
    std::uint8_t level = 0;
    while (top_ > 0 && level_[top_ - 1] == level) {
      const double* below = row(top_ - 1);
      for (std::size_t p = 0; p < pairs_; ++p) leaf_[p] = below[p] + leaf_[p];
      --top_;
      ++level;
    }
    std::copy(leaf_.begin(), leaf_.end(), row(top_));
    level_[top_] = level;
    ++top_;
  }

  void end_chunk() {
    if (top_ == 0) return;
    std::copy_n(row(top_ - 1), pairs_, leaf_.begin());
    for (int t = top_ - 2; t >= 0; --t) {
      const double* r = row(static_cast<std::size_t>(t));
      for (std::size_t p = 0; p < pairs_; ++p) leaf_[p] = r[p] + leaf_[p];
    }
    for (std::size_t p = 0; p < pairs_; ++p) total_[p] += leaf_[p];
    top_ = 0;
  }

  double total(std::size_t p) const { return total_[p]; }

 private:
  static constexpr std::size_t kMaxLevels = 16;
  double* row(std::size_t t) { return stack_.data() + t * pairs_; }

  std::size_t pairs_;
  std::vector<double> leaf_;
  std::vector<double> stack_;
  std::vector<double> total_;
  std::uint8_t level_[kMaxLevels] = {};
  int top_ = 0;
};

constexpr std::size_t kBlock = 4;

std::size_t padded_rows(std::size_t n) { return (n + kBlock - 1) / kBlock * kBlock; }

// Copies one leaf of every tile member into a zero-padded row-major buffer
// with the row count rounded up to a whole register block.
void fill_leaf(const Tile& t, std::size_t begin, std::size_t len, std::vector<double>& buf) {
  buf.assign(padded_rows(t.masks.size()) * kLeafCells, 0.0);
  for (std::size_t i = 0; i < t.masks.size(); ++i) {
    const float* src = t.masks[i].values().data() + begin;
    double* dst = buf.data() + i * kLeafCells;
    for (std::size_t x = 0; x < len; ++x) dst[x] = src[x];
  }
}

// One lane per cell position modulo kLanes, as in reduce::leaf_sum.
typedef double Lanes __attribute__((vector_size(kLanes * sizeof(double))));

inline Lanes load_lanes(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline double combine(const Lanes& v) {
  double a[kLanes];
  std::memcpy(a, &v, sizeof a);
  return reduce::combine_lanes(a);
}

// 4x4 register block of leaf dot products sum_x [w_x] a_i(x) b_j(x). Each
// result is bit-identical to the leaf term of prob_inclusion for that pair.
template <bool Weighted>
inline void leaf_dot_block(const double* a, const double* b, const double* w, double* out,
                           std::size_t out_stride) {
  Lanes acc[kBlock][kBlock] = {};
  for (std::size_t x = 0; x < kLeafCells; x += kLanes) {
    Lanes av[kBlock], bv[kBlock];
    for (std::size_t r = 0; r < kBlock; ++r) {
      av[r] = load_lanes(a + r * kLeafCells + x);
      bv[r] = load_lanes(b + r * kLeafCells + x);
    }
    Lanes wv{};
    if constexpr (Weighted) wv = load_lanes(w + x);
    for (std::size_t r = 0; r < kBlock; ++r) {
      for (std::size_t c = 0; c < kBlock; ++c) {
        Lanes p = av[r] * bv[c];
        if constexpr (Weighted) p = wv * p;
        acc[r][c] += p;
      }
    }
  }
  for (std::size_t r = 0; r < kBlock; ++r) {
    for (std::size_t c = 0; c < kBlock; ++c) out[r * out_stride + c] = combine(acc[r][c]);
  }
}

// Overlap integrals sum_x w_x u_i(x) u_j(x) for every pair of the two tiles,
// laid out [i * padded_rows(|B|) + j]. For a diagonal tile only entries with
// i <= j are meaningful.
template <bool Weighted>
PairSums tile_overlaps(const Tile& A, const Tile& B, bool diagonal, const GridSpec& grid) {
  const std::size_t pa = padded_rows(A.masks.size());
  const std::size_t pb = padded_rows(B.masks.size());
  const std::size_t cells = grid.cell_count();
  PairSums sums(pa * pb);
  std::vector<double> abuf, bbuf, wbuf(kLeafCells, 0.0);
  const auto weights = grid.weights();

  for (std::size_t chunk = 0; chunk < cells; chunk += kChunkCells) {
    const std::size_t chunk_end = std::min(cells, chunk + kChunkCells);
    for (std::size_t leaf = chunk; leaf < chunk_end; leaf += kLeafCells) {
      const std::size_t len = std::min(kLeafCells, chunk_end - leaf);
      fill_leaf(A, leaf, len, abuf);
      const std::vector<double>& bref = diagonal ? abuf : (fill_leaf(B, leaf, len, bbuf), bbuf);
      if constexpr (Weighted) {
        std::fill(wbuf.begin(), wbuf.end(), 0.0);
        std::copy_n(weights.data() + leaf, len, wbuf.begin());
      }
      double* out = sums.leaf();
      for (std::size_t i = 0; i < pa; i += kBlock) {
        for (std::size_t j = diagonal ? i : 0; j < pb; j += kBlock) {
          leaf_dot_block<Weighted>(abuf.data() + i * kLeafCells, bref.data() + j * kLeafCells,
                                   wbuf.data(), out + i * pb + j, pb);
        }
      }
      sums.push_leaf();
    }
    sums.end_chunk();
  }
  return sums;
}

// Set differences |A_i \ A_j| and |A_j \ A_i| for every pair of two tiles of
// 0/1 masks. Returned as {ab, ba} sums.
std::pair<std::vector<reduce::ChunkedSum>, std::vector<reduce::ChunkedSum>> tile_differences(
    const Tile& A, const Tile& B, bool diagonal, const GridSpec& grid) {
  const std::size_t na = A.masks.size();
  const std::size_t nb = B.masks.size();
  const std::size_t cells = grid.cell_count();
  std::vector<reduce::ChunkedSum> ab(na * nb), ba(na * nb);
  const auto weights = grid.weights();
  const bool uniform = grid.is_uniform();

  std::vector<std::uint8_t> abits, bbits;
  auto fill_bits = [&](const Tile& t, std::size_t begin, std::size_t len,
                       std::vector<std::uint8_t>& buf) {
    buf.assign(t.masks.size() * kLeafCells, 0);
    for (std::size_t i = 0; i < t.masks.size(); ++i) {
      const float* src = t.masks[i].values().data() + begin;
      std::uint8_t* dst = buf.data() + i * kLeafCells;
      for (std::size_t x = 0; x < len; ++x) dst[x] = src[x] != 0.0f;
    }
  };

  for (std::size_t chunk = 0; chunk < cells; chunk += kChunkCells) {
    const std::size_t chunk_end = std::min(cells, chunk + kChunkCells);
    for (std::size_t leaf = chunk; leaf < chunk_end; leaf += kLeafCells) {
      const std::size_t len = std::min(kLeafCells, chunk_end - leaf);
      fill_bits(A, leaf, len, abits);
      if (!diagonal) fill_bits(B, leaf, len, bbits);
      const std::vector<std::uint8_t>& bref = diagonal ? abits : bbits;
      for (std::size_t i = 0; i < na; ++i) {
        const std::uint8_t* a = abits.data() + i * kLeafCells;
        for (std::size_t j = diagonal ? i + 1 : 0; j < nb; ++j) {
          const std::uint8_t* b = bref.data() + j * kLeafCells;
          double d_ab;
          double d_ba;
          if (uniform) {
            // Integer counts are exact, so their order does not matter.
            unsigned c_ab = 0;
            unsigned c_ba = 0;
            for (std::size_t x = 0; x < kLeafCells; ++x) {
              c_ab += a[x] & (b[x] ^ 1u);
              c_ba += b[x] & (a[x] ^ 1u);
            }
            d_ab = c_ab;
            d_ba = c_ba;
          } else {
            const double* w = weights.data() + leaf;
            double acc_ab[kLanes] = {};
            double acc_ba[kLanes] = {};
            std::size_t x = 0;
            for (; x + kLanes <= len; x += kLanes) {
              for (std::size_t k = 0; k < kLanes; ++k) {
                acc_ab[k] += (a[x + k] & (b[x + k] ^ 1u)) ? w[x + k] : 0.0;
                acc_ba[k] += (b[x + k] & (a[x + k] ^ 1u)) ? w[x + k] : 0.0;
              }
            }
            for (std::size_t k = 0; x < len; ++x, ++k) {
              acc_ab[k] += (a[x] & (b[x] ^ 1u)) ? w[x] : 0.0;
              acc_ba[k] += (b[x] & (a[x] ^ 1u)) ? w[x] : 0.0;
            }
            d_ab = reduce::combine_lanes(acc_ab);
            d_ba = reduce::combine_lanes(acc_ba);
          }
          ab[i * nb + j].push_leaf(d_ab);
          ba[i * nb + j].push_leaf(d_ba);
        }
      }
    }
    for (auto& s : ab) s.end_chunk();
    for (auto& s : ba) s.end_chunk();
  }
  return {std::move(ab), std::move(ba)};
}

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

DepthResult depth_eid(const Ensemble& e, const DepthOptions& options) {
  const auto start = Clock::now();
  require_members(e);
  const std::size_t workers = std::max<std::size_t>(1, options.workers);

  std::vector<double> mass(e.size());
  parallel_for(e.size(), workers, [&](std::size_t i) {
    const ProbMask m = e.member(i);
    if (!m.is_binary()) {
      throw DataError("eID needs binary masks; member '" + e.ids()[i] +
                      "' has fractional values (binarize first)");
    }
    mass[i] = mask_mass(m);
  });

  DepthResult r;
  pairwise_inclusion_sums(
      e, workers,
      [&](const Tile& A, const Tile& B, bool diagonal, double* incl_ab, double* incl_ba) {
        const auto [ab, ba] = tile_differences(A, B, diagonal, e.grid());
        const std::size_t nb = B.masks.size();
        for (std::size_t i = 0; i < A.masks.size(); ++i) {
          const double mi = mass[A.begin + i];
          if (diagonal) {
            incl_ab[i * nb + i] = incl_ba[i * nb + i] = mi > 0.0 ? 1.0 : 0.0;
          }
          for (std::size_t j = diagonal ? i + 1 : 0; j < nb; ++j) {
            const double mj = mass[B.begin + j];
            const double sub_ij = mi > 0.0 ? 1.0 - ab[i * nb + j].total() / mi : 0.0;
            const double sub_ji = mj > 0.0 ? 1.0 - ba[i * nb + j].total() / mj : 0.0;
            incl_ab[i * nb + j] = sub_ij;
            incl_ba[i * nb + j] = sub_ji;
            if (diagonal) {
              incl_ab[j * nb + i] = sub_ji;
              incl_ba[j * nb + i] = sub_ij;
            }
          }
        }
      },
      r.in_in, r.in_out);

  r.cv_mass = mass_cv(mass);
  finish(r, e, DepthMethod::eid, options, start);
  return r;
}

DepthResult depth_pid(const Ensemble& e, const DepthOptions& options) {
  const auto start = Clock::now();
  require_members(e);
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  const std::vector<double> mass = member_masses(e, workers);
  const bool weighted = !e.grid().is_uniform();

  DepthResult r;
  pairwise_inclusion_sums(
      e, workers,
      [&](const Tile& A, const Tile& B, bool diagonal, double* incl_ab, double* incl_ba) {
        const auto overlap = weighted ? tile_overlaps<true>(A, B, diagonal, e.grid())
                                      : tile_overlaps<false>(A, B, diagonal, e.grid());
        const std::size_t nb = B.masks.size();
        for (std::size_t i = 0; i < A.masks.size(); ++i) {
          const double mi = mass[A.begin + i];
          for (std::size_t j = diagonal ? i : 0; j < nb; ++j) {
            const double g = overlap.total(i * padded_rows(nb) + j);
            const double mj = mass[B.begin + j];
            incl_ab[i * nb + j] = ratio_or_zero(g, mi);
            incl_ba[i * nb + j] = ratio_or_zero(g, mj);
            if (diagonal) {
              incl_ab[j * nb + i] = ratio_or_zero(g, mj);
              incl_ba[j * nb + i] = ratio_or_zero(g, mi);
            }
          }
        }
      },
      r.in_in, r.in_out);

  r.cv_mass = mass_cv(mass);
  finish(r, e, DepthMethod::pid, options, start);
  return r;
}

DepthResult depth_pid_mean(const Ensemble& e, const DepthOptions& options) {
  const auto start = Clock::now();
  require_members(e);
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  const std::vector<double> mean = mean_field(e, workers);
  const GridSpec& grid = e.grid();

  const double mean_mass =
      grid.is_uniform()
          ? reduce::sum_cells(mean.size(), [&](std::size_t x) { return mean[x]; })
          : reduce::sum_cells(mean.size(), [&, w = grid.weights()](std::size_t x) {
              return w[x] * mean[x];
            });
  if (!(mean_mass > 0.0)) throw DataError("pid-mean: ensemble mean has zero mass");

  DepthResult r;
  const std::size_t n = e.size();
  r.in_in.assign(n, 0.0);
  r.in_out.assign(n, 0.0);
  std::vector<double> mass(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const ProbMask u = e.member(i);
    const auto v = u.values();
    std::array<double, 2> s;  // {sum w*u*mean, sum w*u}
    if (grid.is_uniform()) {
      s = reduce::sum_cells_fused<2>(v.size(), [&](std::size_t x, double* t) {
        const double a = v[x];
        t[0] = a * mean[x];
        t[1] = a;
      });
    } else {
      const auto w = grid.weights();
      s = reduce::sum_cells_fused<2>(v.size(), [&](std::size_t x, double* t) {
        const double a = v[x];
        t[0] = w[x] * (a * mean[x]);
        t[1] = w[x] * a;
      });
    }
    mass[i] = s[1];
    r.in_in[i] = ratio_or_zero(s[0], s[1]);
    r.in_out[i] = s[0] / mean_mass;
  });

  r.cv_mass = mass_cv(mass);
  if (r.cv_mass > options.cv_warning_threshold) {
    r.warnings.push_back("pid-mean: coefficient of variation of member masses is " +
                         std::to_string(r.cv_mass) + " (> " +
                         std::to_string(options.cv_warning_threshold) +
                         "); the approximation may be unreliable, consider exact pid");
  }
  finish(r, e, DepthMethod::pid_mean, options, start);
  return r;
}

DepthResult depth_similarity_baseline(const Ensemble& e, SimilarityMeasure measure,
                                      const DepthOptions& options) {
  const auto start = Clock::now();
  require_members(e);
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  const std::vector<double> mean = mean_field(e, workers);

  DepthResult r;
  const std::size_t n = e.size();
  r.in_in.assign(n, 0.0);
  std::vector<double> mass(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const ProbMask u = e.member(i);
    mass[i] = mask_mass(u);
    r.in_in[i] = measure == SimilarityMeasure::fuzzy_dice ? fuzzy_dice(u, mean) : prob_iou(u, mean);
  });
  r.in_out = r.in_in;
  r.cv_mass = mass_cv(mass);
  finish(r, e, measure == SimilarityMeasure::fuzzy_dice ? DepthMethod::dice : DepthMethod::iou,
         options, start);
  return r;
}

DepthResult compute_depth(const Ensemble& e, DepthMethod method, const DepthOptions& options) {
  switch (method) {
    case DepthMethod::eid: return depth_eid(e, options);
    case DepthMethod::pid: return depth_pid(e, options);
    case DepthMethod::pid_mean: return depth_pid_mean(e, options);
    case DepthMethod::dice:
      return depth_similarity_baseline(e, SimilarityMeasure::fuzzy_dice, options);
    case DepthMethod::iou:
      return depth_similarity_baseline(e, SimilarityMeasure::prob_iou, options);
  }
  throw InvalidArgument("unknown depth method");
}

PidMeanComparison compare_pid_vs_mean(const Ensemble& e, const DepthOptions& options) {
  if (e.size() < 2) throw InvalidArgument("compare_pid_vs_mean needs at least two members");
  PidMeanComparison c;
  c.pid = depth_pid(e, options);
  c.pid_mean = depth_pid_mean(e, options);
  const std::size_t n = e.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = std::abs(c.pid.depth[i] - c.pid_mean.depth[i]);
    c.max_abs_error = std::max(c.max_abs_error, err);
    total += err;
  }
  c.mean_abs_error = total / static_cast<double>(n);
  const auto r1 = to_doubles(c.pid.rank);
  const auto r2 = to_doubles(c.pid_mean.rank);
  c.rank_pearson = pearson(r1, r2);
  c.rank_kendall = kendall_tau(r1, r2);
  c.cv_mass = c.pid_mean.cv_mass;
  return c;
}

}  // namespace fuzzdepth
