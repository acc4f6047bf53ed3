#pragma once

// Deterministic cell reductions.
//
// Every sum over grid cells in the library goes through the same fixed
// evaluation order so that results are bit-reproducible regardless of how
// many workers run or how callers tile the work:
//
//   * cells are split into chunks of kChunkCells, summed in ascending order;
//   * each chunk is split into leaves of kLeafCells;
//   * inside a leaf, cell x contributes to lane (x - leaf_begin) % kLanes and
//     the lanes are combined as ((l0+l1)+(l2+l3))+((l4+l5)+(l6+l7));
//   * leaves inside a chunk are combined pairwise by a binary counter.
//
// Accumulation is always in double.

#include <array>
#include <cstddef>
#include <cstdint>

namespace fuzzdepth::reduce {

inline constexpr std::size_t kChunkCells = 65536;
inline constexpr std::size_t kLeafCells = 256;
inline constexpr std::size_t kLanes = 8;

inline double combine_lanes(const double* acc) {
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

/// Pairwise (tree) combination of leaf sums inside a chunk, followed by a
/// sequential sum over chunks.
class ChunkedSum {
 public:
  void push_leaf(double value) {
    std::uint8_t level = 0;
    while (top_ > 0 && level_[top_ - 1] == level) {
      value = stack_[top_ - 1] + value;
      --top_;
      ++level;
    }
    stack_[top_] = value;
    level_[top_] = level;
    ++top_;
  }

  void end_chunk() {
    if (top_ == 0) return;
    double chunk = stack_[top_ - 1];
    for (int i = top_ - 2; i >= 0; --i) chunk = stack_[i] + chunk;
    top_ = 0;
    total_ += chunk;
  }

  double total() const { return total_; }

 private:
  // 256 leaves per chunk need at most 9 pending levels.
  double stack_[16] = {};
  std::uint8_t level_[16] = {};
  int top_ = 0;
  double total_ = 0.0;
};

/// Sums term(x) for x in [begin, end) using the lane layout described above.
template <class Term>
double leaf_sum(std::size_t begin, std::size_t end, Term&& term) {
  double acc[kLanes] = {};
  std::size_t x = begin;
  for (; x + kLanes <= end; x += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) acc[k] += term(x + k);
  }
  for (std::size_t k = 0; x < end; ++x, ++k) acc[k] += term(x);
  return combine_lanes(acc);
}

/// Deterministic sum of term(x) over x in [0, count).
template <class Term>
double sum_cells(std::size_t count, Term&& term) {
  ChunkedSum sum;
  for (std::size_t chunk = 0; chunk < count; chunk += kChunkCells) {
    const std::size_t chunk_end = chunk + kChunkCells < count ? chunk + kChunkCells : count;
    for (std::size_t leaf = chunk; leaf < chunk_end; leaf += kLeafCells) {
      const std::size_t leaf_end = leaf + kLeafCells < chunk_end ? leaf + kLeafCells : chunk_end;
      sum.push_leaf(leaf_sum(leaf, leaf_end, term));
    }
    sum.end_chunk();
  }
  return sum.total();
}

/// K independent sums evaluated in one pass. term(x, out) adds nothing itself;
/// it writes the K per-cell terms into out[0..K).
template <std::size_t K, class Term>
std::array<double, K> sum_cells_fused(std::size_t count, Term&& term) {
  std::array<ChunkedSum, K> sums{};
  for (std::size_t chunk = 0; chunk < count; chunk += kChunkCells) {
    const std::size_t chunk_end = chunk + kChunkCells < count ? chunk + kChunkCells : count;
    for (std::size_t leaf = chunk; leaf < chunk_end; leaf += kLeafCells) {
      const std::size_t leaf_end = leaf + kLeafCells < chunk_end ? leaf + kLeafCells : chunk_end;
      double acc[K][kLanes] = {};
      double t[K];
      std::size_t x = leaf;
      for (; x + kLanes <= leaf_end; x += kLanes) {
        for (std::size_t k = 0; k < kLanes; ++k) {
          term(x + k, t);
          for (std::size_t s = 0; s < K; ++s) acc[s][k] += t[s];
        }
      }
      for (std::size_t k = 0; x < leaf_end; ++x, ++k) {
        term(x, t);
        for (std::size_t s = 0; s < K; ++s) acc[s][k] += t[s];
      }
      for (std::size_t s = 0; s < K; ++s) sums[s].push_leaf(combine_lanes(acc[s]));
    }
    for (auto& s : sums) s.end_chunk();
  }
  std::array<double, K> out{};
  for (std::size_t s = 0; s < K; ++s) out[s] = sums[s].total();
  return out;
}

}  // namespace fuzzdepth::reduce
