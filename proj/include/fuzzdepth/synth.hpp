#pragma once

// Synthetic ensembles: fuzzy disks, fuzzy ellipsoids with outlier
// contamination, and radially perturbed binary contours.
//
// Every generator is a pure function of (seed, parameters). Each member draws
// from its own stream seeded from (seed, member index), so members can be
// generated independently and in parallel; the draws use only the raw 64-bit
// output of std::mt19937_64 (fully specified by the standard), never the
// implementation-defined std:: distributions.

#include <array>
#include <cstdint>
#include <random>

#include "fuzzdepth/grid.hpp"

namespace fuzzdepth {

/// Seedable stream with portable uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Independent stream for (seed, stream).
  static Rng stream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Box-Muller; consumes two uniforms per call.
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 1 within `radius` of `center` (cell-index coordinates), Gaussian falloff
/// exp(-(d - radius)^2 / (2 sigma2)) outside.
ProbMask gen_fuzzy_disk(const GridSpec& grid2d, std::array<double, 2> center, double radius,
                        double sigma2);

struct SynthOptions {
  std::size_t workers = 1;
  /// Produce members on demand instead of holding them in memory.
  bool lazy = false;
};

struct DiskConfig {
  double radius_fraction = 0.25;  // of res
  double radius_jitter = 0.10;    // relative std
  double center_jitter = 0.05;    // of res
  double sigma2 = 0.8;            // falloff variance in cells^2
};

/// n fuzzy disks on a res x res grid with jittered centres and radii.
Ensemble gen_disk_ensemble(std::size_t n, std::size_t res, std::uint64_t seed,
                           const DiskConfig& config = {}, const SynthOptions& options = {});

struct EllipsoidConfig {
  std::array<double, 3> axis_fraction{0.30, 0.25, 0.20};  // semi-axes, of res
  double axis_jitter = 0.05;                              // relative std per axis
  double center_jitter = 0.01;                            // of res, std per axis
  double falloff_sigma = 0.02;                            // of res
  std::array<double, 2> outlier_scales{0.5, 1.6};         // one picked uniformly
  double outlier_offset = 0.15;                           // of res, along one axis
};

/// Fuzzy ellipsoid member `index` (outliers use the contaminated recipe).
ProbMask gen_ellipsoid_member(std::size_t res, std::uint64_t seed, std::size_t index,
                              bool outlier, const EllipsoidConfig& config = {});

/// n_base regular members ("base_0000", ...) followed by n_outliers outliers
/// ("outlier_0000", ...) on a res^3 grid.
Ensemble gen_ellipsoid_ensemble(std::size_t res, std::size_t n_base, std::size_t n_outliers,
                                std::uint64_t seed, const EllipsoidConfig& config = {},
                                const SynthOptions& options = {});

struct ContourConfig {
  double base_radius = 0.35;           // of res
  double amplitude = 0.03;             // Fourier coefficient std, of res
  std::size_t max_order = 5;           // orders 1..max_order
  double outlier_probability = 0.2;
  double outlier_amplitude_factor = 3.0;
};

/// n binary closed contours on a res x res grid: a circle whose radius is
/// modulated by a random low-order Fourier series.
Ensemble gen_contour_ensemble_2d(std::size_t n, std::size_t res, std::uint64_t seed,
                                 const ContourConfig& config = {},
                                 const SynthOptions& options = {});

}  // namespace fuzzdepth
