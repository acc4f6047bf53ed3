#pragma once

// Persistence: .npy and raw+JSON volumes, ensemble manifests, and result
// tables. All binary data is little-endian, all JSON UTF-8.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fuzzdepth/boxplot.hpp"
#include "fuzzdepth/consistency.hpp"
#include "fuzzdepth/depth.hpp"
#include "fuzzdepth/fuzzify.hpp"
#include "fuzzdepth/grid.hpp"

namespace fuzzdepth::io {

enum class DType { f32, f64, u8, boolean };

std::size_t dtype_size(DType t);
std::string_view to_string(DType t);

/// Dimensions and element type of a stored volume.
struct VolumeHeader {
  std::vector<std::size_t> dims;
  DType dtype = DType::f32;

  std::size_t element_count() const;
};

/// Untyped C-order payload.
struct RawVolume {
  VolumeHeader header;
  std::vector<unsigned char> bytes;
};

enum class VolumeFormat {
  npy,       // .npy, version 1.0 header
  raw_json,  // raw little-endian bytes plus a "<path>.json" sidecar
};

/// Format chosen from the extension: ".npy" or anything else (raw + sidecar).
VolumeFormat format_for(const std::filesystem::path& path);

/// Reads only the header (npy) or the sidecar (raw).
VolumeHeader read_volume_header(const std::filesystem::path& path);
RawVolume read_volume(const std::filesystem::path& path);
void write_volume(const RawVolume& v, const std::filesystem::path& path);

/// Any dtype as doubles.
ScalarField to_field(const RawVolume& v, const GridSpec& grid);
/// u8/bool as 0/1 indicators (nonzero is 1); floats validated to [0,1].
ProbMask to_mask(const RawVolume& v, const GridSpec& grid);

RawVolume to_volume(const ProbMask& u);     // f32
RawVolume to_volume(const BinaryMask& b);   // u8
RawVolume to_volume(const ScalarField& f);  // f64

/// Convenience wrappers on a uniform grid with the stored dims.
ProbMask read_mask(const std::filesystem::path& path);
ScalarField read_field(const std::filesystem::path& path);
void write_volume(const ProbMask& u, const std::filesystem::path& path);
void write_volume(const BinaryMask& b, const std::filesystem::path& path);
void write_volume(const ScalarField& f, const std::filesystem::path& path);

// Manifests ---------------------------------------------------------------

enum class FuzzifyMode { isovalue, sublevel, minmax, scale_by_max };

struct FuzzifySpec {
  FuzzifyMode mode = FuzzifyMode::isovalue;
  double q = 0.0;
  /// isovalue only; defaults to default_fuzzy_width(field).
  std::optional<double> width;
};

struct ManifestMember {
  std::string id;
  std::filesystem::path path;  // relative paths resolve against the manifest's directory
  bool is_field = false;       // role "field" (needs fuzzify) or "mask"
  std::optional<FuzzifySpec> fuzzify;
};

struct Manifest {
  std::vector<std::size_t> dims;
  std::optional<std::filesystem::path> weights_path;
  std::vector<ManifestMember> members;
};

Manifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

/// Lazy ensemble. Every member header is checked against the grid up front;
/// payloads load on demand.
Ensemble read_manifest(const std::filesystem::path& path);

/// Writes each member as "<id>.npy" (f32) plus weights.npy for weighted grids
/// and manifest.json into dir. Returns the manifest path.
std::filesystem::path write_ensemble(const Ensemble& e, const std::filesystem::path& dir,
                                     std::size_t workers = 1);

// Result tables -----------------------------------------------------------

/// CSV "id,in_in,in_out,depth,rank,method" (one row per member, input order,
/// %.17g) plus a "<path>.json" sidecar with run diagnostics.
void write_depth_csv(const DepthResult& d, const std::filesystem::path& path,
                     const std::vector<std::size_t>& dims);
/// Reads the CSV written above; diagnostics come from the sidecar when present.
DepthResult read_depth_csv(const std::filesystem::path& path);

/// "# pearson=..,kendall=.." line, then "id,rank1,rank2,abs_delta" rows.
void write_rank_scatter_csv(const RankScatter& s, const std::filesystem::path& path);
void write_stability_json(const StabilityReport& r, const std::filesystem::path& path);
/// Square matrix with a header row and column of labels.
void write_matrix_csv(const std::vector<std::string>& labels,
                      const std::vector<std::vector<double>>& m, const std::filesystem::path& path);

/// Envelope volumes (u8 .npy) and boxplot.json listing files, percentiles,
/// threshold, median ID and outliers. Returns the JSON path.
std::filesystem::path write_boxplot(const BoxplotArtifact& a, const std::filesystem::path& dir,
                                    const std::vector<std::filesystem::path>& slice_images = {});

/// Writes text to a file, IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fuzzdepth::io
