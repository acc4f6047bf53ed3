#include "fuzzdepth/boxplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "fuzzdepth/error.hpp"

namespace fuzzdepth {

std::size_t band_size(double p, std::size_t n) {
  const double t = p * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(t));
  // p*n can land a hair above an integer (0.3*10 = 3.0000000000000004).
  if (k > 0 && static_cast<double>(k - 1) >= t - 1e-9) --k;
  return std::clamp<std::size_t>(k, 1, n);
}

BoxplotArtifact build_boxplot(const Ensemble& e, const DepthResult& d,
                              const std::vector<double>& percentiles, double threshold,
                              std::size_t outlier_count) {
  const std::size_t n = e.size();
  if (d.size() != n || d.ids != e.ids()) {
    throw DataError("depth result does not belong to this ensemble (member IDs differ)");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("boxplot threshold must lie in (0,1]");
  }
  for (std::size_t i = 0; i < percentiles.size(); ++i) {
    const double p = percentiles[i];
    if (!(p > 0.0 && p <= 1.0)) {
      throw InvalidArgument("percentile " + std::to_string(p) + " outside (0,1]");
    }
    if (i > 0 && !(p > percentiles[i - 1])) {
      throw InvalidArgument("percentiles must be strictly ascending");
    }
  }
  if (outlier_count >= n) {
    throw InvalidArgument("outlier count " + std::to_string(outlier_count) +
                          " must be smaller than the ensemble size " + std::to_string(n));
  }

  std::vector<std::size_t> by_rank(n);
  for (std::size_t i = 0; i < n; ++i) by_rank.at(d.rank.at(i)) = i;

  const std::size_t median_index = by_rank[0];
  BoxplotArtifact a{e.ids()[median_index], binarize(e.member(median_index), threshold), {}, {},
                    threshold};

  const std::size_t cells = e.grid().cell_count();
  // Bands are nested, so one sweep in rank order serves all of them.
  std::vector<std::uint8_t> uni(cells, 0), inter(cells, 1);
  std::size_t added = 0;
  for (double p : percentiles) {
    const std::size_t k = band_size(p, n);
    for (; added < k; ++added) {
      const BinaryMask m = binarize(e.member(by_rank[added]), threshold);
      const auto bits = m.bits();
      for (std::size_t x = 0; x < cells; ++x) {
        uni[x] |= bits[x];
        inter[x] &= bits[x];
      }
    }
    BoxplotBand band{p, BinaryMask(e.grid(), uni), BinaryMask(e.grid(), inter), {}};
    for (std::size_t r = 0; r < k; ++r) band.member_ids.push_back(e.ids()[by_rank[r]]);
    a.bands.push_back(std::move(band));
  }
  for (std::size_t r = n - outlier_count; r < n; ++r) a.outlier_ids.push_back(e.ids()[by_rank[r]]);
  return a;
}

namespace {

struct SliceView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> cell;  // flat grid index per pixel
};

SliceView make_slice(const GridSpec& grid, std::size_t axis, std::size_t index) {
  const auto dims = grid.dims();
  if (dims.size() != 2 && dims.size() != 3) {
    throw InvalidArgument("slice images need a 2D or 3D grid, got " + std::to_string(dims.size()) + "D");
  }
  if (axis >= dims.size()) {
    throw InvalidArgument("slice axis " + std::to_string(axis) + " out of range for a " +
                          std::to_string(dims.size()) + "D grid");
  }
  if (index >= dims[axis]) {
    throw InvalidArgument("slice index " + std::to_string(index) + " out of range for axis " +
                          std::to_string(axis));
  }
  SliceView s;
  if (dims.size() == 2) {
    s.rows = dims[0];
    s.cols = dims[1];
    for (std::size_t x = 0; x < s.rows * s.cols; ++x) s.cell.push_back(x);
    return s;
  }
  std::size_t free_axes[2];
  for (std::size_t k = 0, f = 0; k < 3; ++k) {
    if (k != axis) free_axes[f++] = k;
  }
  s.rows = dims[free_axes[0]];
  s.cols = dims[free_axes[1]];
  const std::size_t stride[3] = {dims[1] * dims[2], dims[2], 1};
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      s.cell.push_back(index * stride[axis] + r * stride[free_axes[0]] + c * stride[free_axes[1]]);
    }
  }
  return s;
}

}  // namespace

std::vector<std::filesystem::path> emit_slice_images(const BoxplotArtifact& a, const Ensemble& e,
                                                     std::size_t axis, std::size_t index,
                                                     const std::filesystem::path& out_dir) {
  const SliceView s = make_slice(e.grid(), axis, index);
  std::vector<std::filesystem::path> written;
  if (a.bands.empty()) return written;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

  auto median_at = [&](std::size_t r, std::size_t c) { return a.median[s.cell[r * s.cols + c]]; };

  for (std::size_t b = 0; b < a.bands.size(); ++b) {
    const BoxplotBand& band = a.bands[b];
    std::vector<unsigned char> pixels(s.rows * s.cols, 0);
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        const std::size_t x = s.cell[r * s.cols + c];
        unsigned char v = 0;
        if (band.intersection_mask[x]) {
          v = 96;
        } else if (band.union_mask[x]) {
          v = 176;
        }
        if (median_at(r, c)) {
          const bool edge = r == 0 || c == 0 || r + 1 == s.rows || c + 1 == s.cols ||
                            !median_at(r - 1, c) || !median_at(r + 1, c) ||
                            !median_at(r, c - 1) || !median_at(r, c + 1);
          if (edge) v = 255;
        }
        pixels[r * s.cols + c] = v;
      }
    }

    char name[96];
    std::snprintf(name, sizeof name, "band%02zu_p%g_axis%zu_%zu.pgm", b, band.percentile * 100.0,
                  axis, index);
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << s.cols << ' ' << s.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write failed for " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace fuzzdepth
