#include "fuzzdepth/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "fuzzdepth/error.hpp"
#include "fuzzdepth/parallel.hpp"
#include "fuzzdepth/reduce.hpp"

namespace fuzzdepth {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw InvalidArgument("grid needs at least one axis");
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw InvalidArgument("grid axis has zero cells");
    if (total > std::numeric_limits<std::size_t>::max() / d) {
      throw InvalidArgument("grid cell count overflows");
    }
    total *= d;
  }
  return total;
}

float checked_value(double v, std::size_t cell) {
  if (std::isnan(v)) throw DataError("mask value at cell " + std::to_string(cell) + " is NaN");
  if (v < 0.0) {
    if (v < -ProbMask::kClampTolerance) {
      throw DataError("mask value " + std::to_string(v) + " at cell " + std::to_string(cell) +
                      " is below 0");
    }
    return 0.0f;
  }
  if (v > 1.0) {
    if (v > 1.0 + ProbMask::kClampTolerance) {
      throw DataError("mask value " + std::to_string(v) + " at cell " + std::to_string(cell) +
                      " is above 1");
    }
    return 1.0f;
  }
  return static_cast<float>(v);
}

}  // namespace

GridSpec::GridSpec(std::vector<std::size_t> dims) : GridSpec(std::move(dims), {}) {}

GridSpec::GridSpec(std::vector<std::size_t> dims, std::vector<double> weights) {
  auto data = std::make_shared<Data>();
  data->cell_count = checked_product(dims);
  if (!weights.empty()) {
    if (weights.size() != data->cell_count) {
      throw InvalidArgument("weights length " + std::to_string(weights.size()) +
                            " does not match cell count " + std::to_string(data->cell_count));
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw InvalidArgument("cell weight at " + std::to_string(i) + " must be finite and > 0");
      }
    }
    // All-ones weights are the uniform grid.
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; })) {
      weights.clear();
    }
  }
  data->dims = std::move(dims);
  data->weights = std::move(weights);
  if (data->weights.empty()) {
    data->total_volume = static_cast<double>(data->cell_count);
  } else {
    const auto& w = data->weights;
    data->total_volume = reduce::sum_cells(w.size(), [&](std::size_t x) { return w[x]; });
  }
  data_ = std::move(data);
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  if (a.data_ == b.data_) return true;
  return a.data_->dims == b.data_->dims && a.data_->weights == b.data_->weights;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw DataError(std::string(what) + ": masks live on different grids");
}

// ---------------------------------------------------------------------------

ProbMask::ProbMask(GridSpec grid, std::vector<float> values) : grid_(std::move(grid)) {
  if (values.size() != grid_.cell_count()) {
    throw DataError("mask has " + std::to_string(values.size()) + " values, grid has " +
                    std::to_string(grid_.cell_count()) + " cells");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!(v >= 0.0f && v <= 1.0f)) values[i] = checked_value(v, i);
  }
  values_ = std::make_shared<const std::vector<float>>(std::move(values));
}

ProbMask ProbMask::from_doubles(GridSpec grid, std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = checked_value(values[i], i);
  return ProbMask(std::move(grid), std::move(out));
}

ProbMask ProbMask::constant(GridSpec grid, float value) {
  const std::size_t n = grid.cell_count();
  return ProbMask(std::move(grid), std::vector<float>(n, value));
}

bool ProbMask::is_binary() const {
  return std::all_of(values_->begin(), values_->end(),
                     [](float v) { return v == 0.0f || v == 1.0f; });
}

bool operator==(const ProbMask& a, const ProbMask& b) {
  return a.grid_ == b.grid_ && (a.values_ == b.values_ || *a.values_ == *b.values_);
}

// ---------------------------------------------------------------------------

BinaryMask::BinaryMask(GridSpec grid, std::vector<std::uint8_t> bits)
    : grid_(std::move(grid)), bits_(std::move(bits)) {
  if (bits_.size() != grid_.cell_count()) {
    throw DataError("binary mask has " + std::to_string(bits_.size()) + " cells, grid has " +
                    std::to_string(grid_.cell_count()));
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::is_subset_of(const BinaryMask& other) const {
  require_same_grid(grid_, other.grid_, "is_subset_of");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

ProbMask BinaryMask::to_prob() const {
  std::vector<float> values(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) values[i] = bits_[i] ? 1.0f : 0.0f;
  return ProbMask(grid_, std::move(values));
}

bool operator==(const BinaryMask& a, const BinaryMask& b) {
  return a.grid_ == b.grid_ && a.bits_ == b.bits_;
}

// ---------------------------------------------------------------------------

void Ensemble::check_ids(const std::vector<std::string>& ids) {
  if (ids.empty()) throw DataError("ensemble has no members");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw DataError("duplicate member id '" + id + "'");
  }
}

Ensemble::Ensemble(GridSpec grid, std::vector<std::string> ids, std::vector<Slot> slots)
    : grid_(std::move(grid)), ids_(std::move(ids)), slots_(std::move(slots)) {}

Ensemble::Ensemble(GridSpec grid, std::vector<std::string> ids, std::vector<ProbMask> members)
    : grid_(std::move(grid)), ids_(std::move(ids)) {
  check_ids(ids_);
  if (members.size() != ids_.size()) {
    throw DataError("ensemble has " + std::to_string(ids_.size()) + " ids but " +
                    std::to_string(members.size()) + " members");
  }
  slots_.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!(members[i].grid() == grid_)) {
      throw DataError("member '" + ids_[i] + "' does not match the ensemble grid");
    }
    slots_.push_back(Slot{std::move(members[i]), {}});
  }
}

namespace {
std::vector<std::string> index_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return ids;
}
}  // namespace

namespace {

GridSpec first_grid(const std::vector<ProbMask>& members) {
  if (members.empty()) throw DataError("ensemble has no members");
  return members.front().grid();
}

}  // namespace

Ensemble::Ensemble(std::vector<ProbMask> members) : grid_(first_grid(members)), ids_(index_ids(members.size())) {
  *this = Ensemble(grid_, ids_, std::move(members));
}

Ensemble Ensemble::lazy(GridSpec grid, std::vector<std::string> ids, std::vector<Loader> loaders) {
  check_ids(ids);
  if (loaders.size() != ids.size()) throw DataError("ensemble ids and loaders differ in length");
  std::vector<Slot> slots;
  slots.reserve(loaders.size());
  for (auto& l : loaders) slots.push_back(Slot{std::nullopt, std::move(l)});
  return Ensemble(std::move(grid), std::move(ids), std::move(slots));
}

bool Ensemble::is_lazy() const {
  return std::any_of(slots_.begin(), slots_.end(), [](const Slot& s) { return !s.mask; });
}

ProbMask Ensemble::member(std::size_t index) const {
  const Slot& slot = slots_.at(index);
  if (slot.mask) return *slot.mask;
  ProbMask loaded = slot.loader();
  if (!(loaded.grid() == grid_)) {
    throw DataError("member '" + ids_[index] + "' does not match the ensemble grid");
  }
  return loaded;
}

Ensemble Ensemble::materialize(std::size_t workers) const {
  std::vector<std::optional<ProbMask>> loaded(size());
  parallel_for(size(), workers, [&](std::size_t i) { loaded[i] = member(i); });
  std::vector<ProbMask> members;
  members.reserve(size());
  for (auto& m : loaded) members.push_back(std::move(*m));
  return Ensemble(grid_, ids_, std::move(members));
}

Ensemble Ensemble::subset(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  std::vector<Slot> slots;
  for (std::size_t i : indices) {
    ids.push_back(ids_.at(i));
    slots.push_back(slots_[i]);
  }
  check_ids(ids);
  return Ensemble(grid_, std::move(ids), std::move(slots));
}

// ---------------------------------------------------------------------------

double mask_mass(const ProbMask& u) {
  const auto v = u.values();
  if (u.grid().is_uniform()) {
    return reduce::sum_cells(v.size(), [&](std::size_t x) { return static_cast<double>(v[x]); });
  }
  const auto w = u.grid().weights();
  return reduce::sum_cells(v.size(), [&](std::size_t x) { return w[x] * v[x]; });
}

std::vector<double> mean_field(const Ensemble& e, std::size_t workers) {
  const std::size_t cells = e.grid().cell_count();
  std::vector<double> acc(cells, 0.0);
  const std::size_t blocks = (cells + reduce::kChunkCells - 1) / reduce::kChunkCells;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const ProbMask m = e.member(i);
    const auto v = m.values();
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t end = std::min(cells, (b + 1) * reduce::kChunkCells);
      for (std::size_t x = b * reduce::kChunkCells; x < end; ++x) acc[x] += v[x];
    });
  }
  const double n = static_cast<double>(e.size());
  for (auto& a : acc) a /= n;
  return acc;
}

ProbMask mean_mask(const Ensemble& e) {
  if (e.size() == 0) throw DataError("mean of an empty ensemble");
  return ProbMask::from_doubles(e.grid(), mean_field(e));
}

BinaryMask binarize(const ProbMask& u, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("binarize threshold must lie in (0,1], got " + std::to_string(threshold));
  }
  const auto v = u.values();
  std::vector<std::uint8_t> bits(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bits[i] = static_cast<double>(v[i]) >= threshold;
  return BinaryMask(u.grid(), std::move(bits));
}

Ensemble binarize(const Ensemble& e, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("binarize threshold must lie in (0,1], got " + std::to_string(threshold));
  }
  if (e.is_lazy()) {
    std::vector<Ensemble::Loader> loaders;
    for (std::size_t i = 0; i < e.size(); ++i) {
      loaders.push_back([e, i, threshold] { return binarize(e.member(i), threshold).to_prob(); });
    }
    return Ensemble::lazy(e.grid(), e.ids(), std::move(loaders));
  }
  std::vector<ProbMask> members;
  for (std::size_t i = 0; i < e.size(); ++i) members.push_back(binarize(e.member(i), threshold).to_prob());
  return Ensemble(e.grid(), e.ids(), std::move(members));
}

// ---------------------------------------------------------------------------

namespace {
void check_permutation(std::span<const std::size_t> perm, std::size_t cells) {
  if (perm.size() != cells) {
    throw InvalidArgument("permutation length " + std::to_string(perm.size()) +
                          " does not match cell count " + std::to_string(cells));
  }
  std::vector<bool> hit(cells, false);
  for (std::size_t p : perm) {
    if (p >= cells || hit[p]) throw InvalidArgument("cell permutation is not a bijection");
    hit[p] = true;
  }
}
}  // namespace

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  check_permutation(perm, perm.size());
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t x = 0; x < perm.size(); ++x) inv[perm[x]] = x;
  return inv;
}

GridSpec permute_cells(const GridSpec& grid, std::span<const std::size_t> perm) {
  check_permutation(perm, grid.cell_count());
  std::vector<std::size_t> dims(grid.dims().begin(), grid.dims().end());
  if (grid.is_uniform()) return GridSpec(std::move(dims));
  const auto w = grid.weights();
  std::vector<double> out(w.size());
  for (std::size_t x = 0; x < w.size(); ++x) out[perm[x]] = w[x];
  return GridSpec(std::move(dims), std::move(out));
}

ProbMask permute_cells(const ProbMask& u, const GridSpec& permuted_grid,
                       std::span<const std::size_t> perm) {
  check_permutation(perm, u.size());
  const auto v = u.values();
  std::vector<float> out(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) out[perm[x]] = v[x];
  return ProbMask(permuted_grid, std::move(out));
}

Ensemble permute_cells(const Ensemble& e, std::span<const std::size_t> perm) {
  GridSpec grid = permute_cells(e.grid(), perm);
  std::vector<ProbMask> members;
  members.reserve(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) members.push_back(permute_cells(e.member(i), grid, perm));
  return Ensemble(grid, e.ids(), std::move(members));
}

}  // namespace fuzzdepth
