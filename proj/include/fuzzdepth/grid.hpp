#pragma once

// Grid geometry, probabilistic and binary masks, and ensemble containers.
//
// All cell data is stored flat in row-major order over GridSpec::dims().
// Masks are immutable and share their storage, so copies are cheap.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fuzzdepth {

/// Cell counts per axis plus optional per-cell volumes. Without weights the
/// grid is uniform (every cell has volume 1).
class GridSpec {
 public:
  explicit GridSpec(std::vector<std::size_t> dims);
  GridSpec(std::vector<std::size_t> dims, std::vector<double> weights);

  std::span<const std::size_t> dims() const { return data_->dims; }
  std::size_t ndim() const { return data_->dims.size(); }
  std::size_t cell_count() const { return data_->cell_count; }
  bool is_uniform() const { return data_->weights.empty(); }
  /// Empty for uniform grids.
  std::span<const double> weights() const { return data_->weights; }
  double weight(std::size_t cell) const { return is_uniform() ? 1.0 : data_->weights[cell]; }
  /// Sum of all cell volumes.
  double total_volume() const { return data_->total_volume; }

  /// Same dims and same weights (uniform equals explicit all-ones).
  friend bool operator==(const GridSpec& a, const GridSpec& b);

 private:
  struct Data {
    std::vector<std::size_t> dims;
    std::vector<double> weights;
    std::size_t cell_count = 0;
    double total_volume = 0.0;
  };
  std::shared_ptr<const Data> data_;
};

/// Fuzzy contour: one membership value in [0,1] per cell, stored as float.
class ProbMask {
 public:
  /// Values within this distance outside [0,1] are clamped; anything
  /// further out is rejected with DataError.
  static constexpr double kClampTolerance = 1e-9;

  ProbMask(GridSpec grid, std::vector<float> values);
  static ProbMask from_doubles(GridSpec grid, std::span<const double> values);
  static ProbMask constant(GridSpec grid, float value);

  const GridSpec& grid() const { return grid_; }
  std::span<const float> values() const { return *values_; }
  std::size_t size() const { return values_->size(); }
  float operator[](std::size_t cell) const { return (*values_)[cell]; }

  /// True when every value is exactly 0 or 1.
  bool is_binary() const;

  friend bool operator==(const ProbMask& a, const ProbMask& b);

 private:
  GridSpec grid_;
  std::shared_ptr<const std::vector<float>> values_;
};

/// Crisp region: one bit per cell (stored as bytes holding 0 or 1).
class BinaryMask {
 public:
  /// Any nonzero byte is stored as 1.
  BinaryMask(GridSpec grid, std::vector<std::uint8_t> bits);

  const GridSpec& grid() const { return grid_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t cell) const { return bits_[cell] != 0; }

  std::size_t count() const;
  bool is_subset_of(const BinaryMask& other) const;
  /// Indicator function as a ProbMask.
  ProbMask to_prob() const;

  friend bool operator==(const BinaryMask& a, const BinaryMask& b);

 private:
  GridSpec grid_;
  std::vector<std::uint8_t> bits_;
};

/// Ordered, ID-labelled members sharing one grid. Members are either held in
/// memory or produced on demand by a loader (file-backed or generated); lazy
/// members are never cached, so walking the ensemble keeps only the members
/// currently in use resident.
class Ensemble {
 public:
  using Loader = std::function<ProbMask()>;

  Ensemble(GridSpec grid, std::vector<std::string> ids, std::vector<ProbMask> members);
  /// IDs default to "0", "1", ...; the grid is taken from the first member.
  explicit Ensemble(std::vector<ProbMask> members);

  static Ensemble lazy(GridSpec grid, std::vector<std::string> ids, std::vector<Loader> loaders);

  std::size_t size() const { return ids_.size(); }
  const GridSpec& grid() const { return grid_; }
  const std::vector<std::string>& ids() const { return ids_; }
  bool is_lazy() const;

  /// Loads lazy members on every call. Safe to call concurrently.
  ProbMask member(std::size_t index) const;

  /// Copy with every member resident in memory.
  Ensemble materialize(std::size_t workers = 1) const;
  /// Members at the given indices, in that order (lazy members stay lazy).
  Ensemble subset(std::span<const std::size_t> indices) const;

 private:
  struct Slot {
    std::optional<ProbMask> mask;
    Loader loader;
  };
  Ensemble(GridSpec grid, std::vector<std::string> ids, std::vector<Slot> slots);
  static void check_ids(const std::vector<std::string>& ids);

  GridSpec grid_;
  std::vector<std::string> ids_;
  std::vector<Slot> slots_;
};

/// m(u) = sum_x w_x u(x).
double mask_mass(const ProbMask& u);

/// Cell-wise arithmetic mean of all members, computed in one streaming pass.
ProbMask mean_mask(const Ensemble& e);

/// Cell-wise mean at double precision, as used internally by the mean-based
/// depth methods.
std::vector<double> mean_field(const Ensemble& e, std::size_t workers = 1);

/// bits(x) = u(x) >= threshold; threshold must lie in (0,1].
BinaryMask binarize(const ProbMask& u, double threshold);
/// Every member replaced by its 0/1 indicator at the threshold.
Ensemble binarize(const Ensemble& e, double threshold);

/// Reindexes cells so that input cell x lands at output cell perm[x]. Member
/// masks and the weight array move together. perm must be a bijection.
Ensemble permute_cells(const Ensemble& e, std::span<const std::size_t> perm);
ProbMask permute_cells(const ProbMask& u, const GridSpec& permuted_grid,
                       std::span<const std::size_t> perm);
GridSpec permute_cells(const GridSpec& grid, std::span<const std::size_t> perm);

/// Inverse permutation.
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);

/// Throws DataError unless both grids are equal.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace fuzzdepth
