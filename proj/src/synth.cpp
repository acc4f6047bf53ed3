#include "fuzzdepth/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>

#include "fuzzdepth/error.hpp"
#include "fuzzdepth/parallel.hpp"

namespace fuzzdepth {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double Rng::normal(double mean, double stddev) {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

template <class MakeMember>
Ensemble build(GridSpec grid, std::vector<std::string> ids, MakeMember make,
               const SynthOptions& options) {
  const std::size_t n = ids.size();
  if (options.lazy) {
    std::vector<Ensemble::Loader> loaders;
    loaders.reserve(n);
    for (std::size_t i = 0; i < n; ++i) loaders.push_back([make, i] { return make(i); });
    return Ensemble::lazy(std::move(grid), std::move(ids), std::move(loaders));
  }
  std::vector<std::optional<ProbMask>> slots(n);
  parallel_for(n, options.workers, [&](std::size_t i) { slots[i] = make(i); });
  std::vector<ProbMask> members;
  members.reserve(n);
  for (auto& s : slots) members.push_back(std::move(*s));
  return Ensemble(std::move(grid), std::move(ids), std::move(members));
}

// Gaussian tails beyond this many sigmas are stored as exact zeros.
constexpr double kFalloffCutoff = 8.0;

}  // namespace

ProbMask gen_fuzzy_disk(const GridSpec& grid2d, std::array<double, 2> center, double radius,
                        double sigma2) {
  if (grid2d.ndim() != 2) throw InvalidArgument("gen_fuzzy_disk needs a 2D grid");
  if (!(radius > 0.0)) throw InvalidArgument("disk radius must be > 0");
  if (!(sigma2 > 0.0)) throw InvalidArgument("disk falloff variance must be > 0");
  const std::size_t rows = grid2d.dims()[0];
  const std::size_t cols = grid2d.dims()[1];
  std::vector<float> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = std::hypot(static_cast<double>(r) - center[0], static_cast<double>(c) - center[1]);
      double u = 1.0;
      if (d > radius) {
        const double e = d - radius;
        u = std::exp(-(e * e) / (2.0 * sigma2));
      }
      v[r * cols + c] = static_cast<float>(u);
    }
  }
  return ProbMask(grid2d, std::move(v));
}

Ensemble gen_disk_ensemble(std::size_t n, std::size_t res, std::uint64_t seed,
                           const DiskConfig& config, const SynthOptions& options) {
  if (n == 0) throw InvalidArgument("disk ensemble needs at least one member");
  if (res < 4) throw InvalidArgument("disk ensemble resolution must be >= 4");
  if (!(config.radius_fraction > 0.0) || config.radius_jitter < 0.0 || config.center_jitter < 0.0 ||
      !(config.sigma2 > 0.0)) {
    throw InvalidArgument("invalid disk config");
  }
  GridSpec grid({res, res});
  const double r = static_cast<double>(res);
  auto make = [grid, seed, config, r](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    const double cx = 0.5 * (r - 1.0) + rng.normal(0.0, config.center_jitter * r);
    const double cy = 0.5 * (r - 1.0) + rng.normal(0.0, config.center_jitter * r);
    const double radius = std::max(0.5, config.radius_fraction * r * rng.normal(1.0, config.radius_jitter));
    return gen_fuzzy_disk(grid, {cx, cy}, radius, config.sigma2);
  };
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(numbered("disk_", i));
  return build(grid, std::move(ids), make, options);
}

ProbMask gen_ellipsoid_member(std::size_t res, std::uint64_t seed, std::size_t index, bool outlier,
                              const EllipsoidConfig& config) {
  const double r = static_cast<double>(res);
  Rng rng = Rng::stream(seed, index);

  std::array<double, 3> axes{};
  std::array<double, 3> center{};
  const double scale = outlier ? config.outlier_scales[rng.below(2)] : 1.0;
  for (int k = 0; k < 3; ++k) {
    axes[k] = std::max(0.5, config.axis_fraction[k] * r * scale * rng.normal(1.0, config.axis_jitter));
  }
  for (int k = 0; k < 3; ++k) center[k] = 0.5 * r + rng.normal(0.0, config.center_jitter * r);
  if (outlier) {
    const auto axis = rng.below(3);
    const double direction = rng.uniform() < 0.5 ? -1.0 : 1.0;
    center[axis] += direction * config.outlier_offset * r;
  }

  const double sigma = config.falloff_sigma * r;
  const double cutoff = kFalloffCutoff * sigma;
  GridSpec grid({res, res, res});
  std::vector<float> v(res * res * res);
  std::size_t x = 0;
  for (std::size_t i = 0; i < res; ++i) {
    const double p0 = static_cast<double>(i) + 0.5 - center[0];
    for (std::size_t j = 0; j < res; ++j) {
      const double p1 = static_cast<double>(j) + 0.5 - center[1];
      for (std::size_t k = 0; k < res; ++k, ++x) {
        const double p2 = static_cast<double>(k) + 0.5 - center[2];
        const double q0 = p0 / axes[0], q1 = p1 / axes[1], q2 = p2 / axes[2];
        const double rho = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2);
        if (rho <= 1.0) {
          v[x] = 1.0f;
          continue;
        }
        // Distance to the surface along the ray from the centre.
        const double d = std::sqrt(p0 * p0 + p1 * p1 + p2 * p2) * (1.0 - 1.0 / rho);
        v[x] = d > cutoff ? 0.0f : static_cast<float>(std::exp(-(d * d) / (2.0 * sigma * sigma)));
      }
    }
  }
  return ProbMask(std::move(grid), std::move(v));
}

Ensemble gen_ellipsoid_ensemble(std::size_t res, std::size_t n_base, std::size_t n_outliers,
                                std::uint64_t seed, const EllipsoidConfig& config,
                                const SynthOptions& options) {
  if (res < 8) throw InvalidArgument("ellipsoid resolution must be >= 8");
  if (n_base + n_outliers == 0) throw InvalidArgument("ellipsoid ensemble needs at least one member");
  for (double a : config.axis_fraction) {
    if (!(a > 0.0)) throw InvalidArgument("ellipsoid axis fractions must be > 0");
  }
  for (double s : config.outlier_scales) {
    if (!(s > 0.0)) throw InvalidArgument("outlier scales must be > 0");
  }
  if (config.axis_jitter < 0.0 || config.center_jitter < 0.0 || !(config.falloff_sigma > 0.0)) {
    throw InvalidArgument("invalid ellipsoid jitter/falloff config");
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n_base; ++i) ids.push_back(numbered("base_", i));
  for (std::size_t i = 0; i < n_outliers; ++i) ids.push_back(numbered("outlier_", i));
  auto make = [res, seed, config, n_base](std::size_t i) {
    return gen_ellipsoid_member(res, seed, i, i >= n_base, config);
  };
  return build(GridSpec({res, res, res}), std::move(ids), make, options);
}

Ensemble gen_contour_ensemble_2d(std::size_t n, std::size_t res, std::uint64_t seed,
                                 const ContourConfig& config, const SynthOptions& options) {
  if (n == 0) throw InvalidArgument("contour ensemble needs at least one member");
  if (res < 8) throw InvalidArgument("contour resolution must be >= 8");
  if (!(config.base_radius > 0.0) || config.amplitude < 0.0 || config.max_order == 0 ||
      config.outlier_probability < 0.0 || config.outlier_probability > 1.0 ||
      config.outlier_amplitude_factor < 0.0) {
    throw InvalidArgument("invalid contour config");
  }
  GridSpec grid({res, res});
  auto make = [grid, res, seed, config](std::size_t i) {
    const double r = static_cast<double>(res);
    Rng rng = Rng::stream(seed, i);
    const bool outlier = rng.uniform() < config.outlier_probability;
    const double amp = config.amplitude * r * (outlier ? config.outlier_amplitude_factor : 1.0);
    std::vector<double> a(config.max_order + 1, 0.0), b(config.max_order + 1, 0.0);
    for (std::size_t k = 1; k <= config.max_order; ++k) {
      a[k] = rng.normal(0.0, amp);
      b[k] = rng.normal(0.0, amp);
    }
    const double base = config.base_radius * r;
    std::vector<float> v(res * res);
    for (std::size_t row = 0; row < res; ++row) {
      const double y = static_cast<double>(row) + 0.5 - 0.5 * r;
      for (std::size_t col = 0; col < res; ++col) {
        const double xx = static_cast<double>(col) + 0.5 - 0.5 * r;
        const double theta = std::atan2(y, xx);
        double radius = base;
        for (std::size_t k = 1; k <= config.max_order; ++k) {
          const double kt = static_cast<double>(k) * theta;
          radius += a[k] * std::cos(kt) + b[k] * std::sin(kt);
        }
        v[row * res + col] = std::hypot(xx, y) < radius ? 1.0f : 0.0f;
      }
    }
    return ProbMask(grid, std::move(v));
  };
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(numbered("contour_", i));
  return build(grid, std::move(ids), make, options);
}

}  // namespace fuzzdepth
