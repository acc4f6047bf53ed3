#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fuzzdepth/boxplot.hpp"
#include "fuzzdepth/consistency.hpp"
#include "fuzzdepth/depth.hpp"
#include "fuzzdepth/error.hpp"
#include "fuzzdepth/io.hpp"
#include "fuzzdepth/parallel.hpp"
#include "fuzzdepth/synth.hpp"
#include "fuzzdepth/version.hpp"
#include "json.hpp"

namespace fuzzdepth::cli {

namespace fs = std::filesystem;

namespace {

struct DepthArgs {
  std::string manifest;
  std::string method;
  std::optional<double> threshold;
  std::string out;
};

struct BoxplotArgs {
  std::string manifest;
  std::string depths;
  std::vector<double> percentiles{0.5, 1.0};
  double threshold = 0.5;
  std::size_t outliers = 0;
  std::string slice;
  std::string out_dir;
};

struct ConsistencyArgs {
  std::vector<std::string> csvs;
  std::string out;
  bool stability = false;
  std::string manifest;
  std::string method = "pid";
  std::size_t remove = 10;
  std::optional<double> threshold;
};

struct SynthArgs {
  std::size_t res = 50;
  std::size_t base = 200;
  std::size_t outliers = 10;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct BenchArgs {
  std::string mode = "ensemble-size";
  std::vector<std::string> methods{"pid", "pid-mean"};
  std::vector<std::size_t> sizes{100, 200, 400};
  std::vector<std::size_t> resolutions{16, 24, 32};
  std::size_t n = 200;
  std::size_t res = 32;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  std::string out;
};

DepthOptions options_for(std::size_t workers) {
  DepthOptions o;
  o.workers = workers;
  return o;
}

Ensemble maybe_binarize(const Ensemble& e, const std::optional<double>& threshold) {
  return threshold ? binarize(e, *threshold) : e;
}

std::vector<std::size_t> dims_of(const Ensemble& e) { return {e.grid().dims().begin(), e.grid().dims().end()}; }

int cmd_depth(const DepthArgs& a, std::size_t workers, std::ostream& out, std::ostream& err) {
  const DepthMethod method = parse_depth_method(a.method);
  Ensemble e = io::read_manifest(a.manifest);
  if (method == DepthMethod::eid && !a.threshold) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e.member(i).is_binary()) {
        throw InvalidArgument("method eid needs binary masks; member '" + e.ids()[i] +
                              "' is fuzzy (pass --threshold to binarize)");
      }
    }
  }
  e = maybe_binarize(e, a.threshold);
  const DepthResult d = compute_depth(e, method, options_for(workers));
  for (const std::string& w : d.warnings) err << "warning: " << w << "\n";
  io::write_depth_csv(d, a.out, dims_of(e));
  out << "wrote " << a.out << " (" << d.size() << " members, method " << to_string(method) << ")\n";
  return 0;
}

std::pair<std::size_t, std::size_t> parse_slice(const std::string& s) {
  std::size_t axis = 0, index = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%zu,%zu%c", &axis, &index, &tail) != 2) {
    throw InvalidArgument("--slice expects AXIS,INDEX, got '" + s + "'");
  }
  return {axis, index};
}

int cmd_boxplot(const BoxplotArgs& a, std::ostream& out) {
  std::optional<std::pair<std::size_t, std::size_t>> slice;
  if (!a.slice.empty()) slice = parse_slice(a.slice);
  const Ensemble e = io::read_manifest(a.manifest);
  const DepthResult d = io::read_depth_csv(a.depths);
  const BoxplotArtifact art = build_boxplot(e, d, a.percentiles, a.threshold, a.outliers);
  std::vector<fs::path> images;
  if (slice) images = emit_slice_images(art, e, slice->first, slice->second, a.out_dir);
  const fs::path manifest = io::write_boxplot(art, a.out_dir, images);
  out << "median " << art.median_id << "; wrote " << manifest.string() << "\n";
  return 0;
}

int cmd_consistency(const ConsistencyArgs& a, std::size_t workers, std::ostream& out) {
  char line[128];
  if (a.stability) {
    if (a.manifest.empty()) throw InvalidArgument("--stability needs --manifest");
    const DepthMethod method = parse_depth_method(a.method);
    const Ensemble e = maybe_binarize(io::read_manifest(a.manifest), a.threshold);
    const StabilityReport r = stability_test(e, method, a.remove, options_for(workers));
    if (!a.out.empty()) io::write_stability_json(r, a.out);
    if (r.degenerate) {
      out << r.note << "\n";
    } else {
      std::snprintf(line, sizeof line, "pearson=%.6f kendall=%.6f\n", r.pearson, r.kendall);
      out << line;
    }
    return 0;
  }
  if (a.csvs.size() < 2) throw InvalidArgument("consistency needs at least two depth CSV files");
  if (a.out.empty()) throw InvalidArgument("consistency needs --out");
  std::vector<DepthResult> results;
  for (const std::string& p : a.csvs) results.push_back(io::read_depth_csv(p));
  if (results.size() == 2) {
    const RankScatter s = rank_scatter(results[0], results[1]);
    io::write_rank_scatter_csv(s, a.out);
    std::snprintf(line, sizeof line, "pearson=%.6f kendall=%.6f\n", s.pearson, s.kendall);
    out << line;
    return 0;
  }
  std::vector<std::string> labels;
  for (const std::string& p : a.csvs) labels.push_back(fs::path(p).stem().string());
  io::write_matrix_csv(labels, consistency_matrix(results), a.out);
  out << "wrote " << a.out << "\n";
  return 0;
}

int write_synth(const Ensemble& e, const std::string& out_dir, nlohmann::json config, std::size_t workers,
                std::ostream& out) {
  const fs::path manifest = io::write_ensemble(e, out_dir, workers);
  config["n"] = e.size();
  config["dims"] = dims_of(e);
  io::write_text(fs::path(out_dir) / "config.json", config.dump(2) + "\n");
  out << "wrote " << e.size() << " members to " << manifest.string() << "\n";
  return 0;
}

int cmd_synth(const std::string& kind, const SynthArgs& a, std::size_t workers, std::ostream& out) {
  SynthOptions so;
  so.workers = workers;
  so.lazy = true;
  if (kind == "ellipsoids") {
    const EllipsoidConfig c;
    const Ensemble e = gen_ellipsoid_ensemble(a.res, a.base, a.outliers, a.seed, c, so);
    nlohmann::json cfg{{"generator", "ellipsoids"},
                       {"res", a.res},
                       {"base", a.base},
                       {"outliers", a.outliers},
                       {"seed", a.seed},
                       {"axis_fraction", c.axis_fraction},
                       {"axis_jitter", c.axis_jitter},
                       {"center_jitter", c.center_jitter},
                       {"falloff_sigma", c.falloff_sigma},
                       {"outlier_scales", c.outlier_scales},
                       {"outlier_offset", c.outlier_offset}};
    return write_synth(e, a.out_dir, cfg, workers, out);
  }
  if (kind == "disks") {
    const DiskConfig c;
    const Ensemble e = gen_disk_ensemble(a.n, a.res, a.seed, c, so);
    nlohmann::json cfg{{"generator", "disks"},       {"res", a.res},
                       {"seed", a.seed},             {"radius_fraction", c.radius_fraction},
                       {"radius_jitter", c.radius_jitter}, {"center_jitter", c.center_jitter},
                       {"sigma2", c.sigma2}};
    return write_synth(e, a.out_dir, cfg, workers, out);
  }
  const ContourConfig c;
  const Ensemble e = gen_contour_ensemble_2d(a.n, a.res, a.seed, c, so);
  nlohmann::json cfg{{"generator", "contours2d"},
                     {"res", a.res},
                     {"seed", a.seed},
                     {"base_radius", c.base_radius},
                     {"amplitude", c.amplitude},
                     {"max_order", c.max_order},
                     {"outlier_probability", c.outlier_probability},
                     {"outlier_amplitude_factor", c.outlier_amplitude_factor}};
  return write_synth(e, a.out_dir, cfg, workers, out);
}

// Resident ensemble plus the dominant working set of the method, in bytes.
double peak_mem_estimate(DepthMethod m, std::size_t n, std::size_t cells, std::size_t workers) {
  const double members = static_cast<double>(n) * static_cast<double>(cells) * sizeof(float);
  const double per_member = static_cast<double>(n) * 6.0 * sizeof(double);
  double working = 0.0;
  switch (m) {
    case DepthMethod::pid:
    case DepthMethod::eid:
      working = static_cast<double>(n) * static_cast<double>(n) * 2.0 * sizeof(double) +
                static_cast<double>(workers) * 2.0 * 32.0 * 256.0 * sizeof(double);
      break;
    case DepthMethod::pid_mean:
    case DepthMethod::dice:
    case DepthMethod::iou:
      working = static_cast<double>(cells) * sizeof(double);
      break;
  }
  return members + per_member + working;
}

int cmd_bench(const BenchArgs& a, std::size_t workers, std::ostream& out) {
  const bool by_size = a.mode == "ensemble-size";
  if (!by_size && a.mode != "resolution") {
    throw InvalidArgument("--mode must be ensemble-size or resolution, got '" + a.mode + "'");
  }
  if (a.repeats == 0) throw InvalidArgument("--repeats must be >= 1");
  if (a.out.empty()) throw InvalidArgument("bench needs --out");
  std::vector<DepthMethod> methods;
  for (const std::string& m : a.methods) methods.push_back(parse_depth_method(m));
  if (methods.empty()) throw InvalidArgument("--methods is empty");
  std::vector<std::size_t> sweep = by_size ? a.sizes : a.resolutions;
  if (sweep.empty()) throw InvalidArgument("sweep list is empty");
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());

  std::string csv = "method,n,res,seconds,peak_mem_estimate\n";
  for (std::size_t point : sweep) {
    const std::size_t n = by_size ? point : a.n;
    const std::size_t res = by_size ? a.res : point;
    if (n < 2) throw InvalidArgument("bench ensembles need at least 2 members");
    // 20% outliers, as in the scalability fixtures.
    const std::size_t n_out = n / 5;
    SynthOptions so;
    so.workers = workers;
    Ensemble e = gen_ellipsoid_ensemble(res, n - n_out, n_out, a.seed, {}, so);
    for (DepthMethod m : methods) {
      const Ensemble input = m == DepthMethod::eid ? binarize(e, 0.5).materialize(workers) : e;
      (void)compute_depth(input, m, options_for(workers));  // warm-up, not timed
      std::vector<double> times;
      for (std::size_t r = 0; r < a.repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)compute_depth(input, m, options_for(workers));
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      char row[160];
      std::snprintf(row, sizeof row, "%s,%zu,%zu,%.6f,%.0f\n", std::string(to_string(m)).c_str(), n, res, median,
                    peak_mem_estimate(m, n, e.grid().cell_count(), workers));
      csv += row;
      out << row;
    }
  }
  io::write_text(a.out, csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical depth for binary and probabilistic contour ensembles", "fuzzdepth"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::size_t workers = 0;
  auto add_workers = [&workers](CLI::App* sub) {
    sub->add_option("--workers", workers, "Worker threads (default: hardware parallelism)")
        ->envname("FUZZDEPTH_WORKERS")
        ->check(CLI::PositiveNumber);
  };

  DepthArgs da;
  auto* depth = app.add_subcommand("depth", "Compute member depths for a manifest");
  depth->add_option("--manifest", da.manifest, "Ensemble manifest (JSON)")->required();
  depth->add_option("--method", da.method, "eid | pid | pid-mean | dice | iou")->required();
  depth->add_option("--threshold", da.threshold, "Binarize members at this value first");
  depth->add_option("--out", da.out, "Output CSV")->required();
  add_workers(depth);

  BoxplotArgs ba;
  auto* boxplot = app.add_subcommand("boxplot", "Build contour-boxplot envelopes");
  boxplot->add_option("--manifest", ba.manifest, "Ensemble manifest (JSON)")->required();
  boxplot->add_option("--depths", ba.depths, "Depth CSV for the same ensemble")->required();
  boxplot->add_option("--percentiles", ba.percentiles, "Comma-separated, ascending, in (0,1]")
      ->delimiter(',')
      ->capture_default_str();
  boxplot->add_option("--threshold", ba.threshold, "Binarization threshold")->capture_default_str();
  boxplot->add_option("--outliers", ba.outliers, "Number of lowest-depth members reported as outliers");
  boxplot->add_option("--slice", ba.slice, "AXIS,INDEX for PGM slice images");
  boxplot->add_option("--out-dir", ba.out_dir, "Output directory")->required();

  ConsistencyArgs ca;
  auto* consistency = app.add_subcommand("consistency", "Rank agreement between depth results");
  consistency->add_option("csvs", ca.csvs, "Depth CSV files (two for a scatter, more for a matrix)");
  consistency->add_option("--out", ca.out, "Output CSV (or JSON with --stability)");
  consistency->add_flag("--stability", ca.stability, "Run the stability-after-removal test");
  consistency->add_option("--manifest", ca.manifest, "Ensemble manifest for --stability");
  consistency->add_option("--method", ca.method, "Depth method for --stability")->capture_default_str();
  consistency->add_option("--remove", ca.remove, "Members removed for --stability")->capture_default_str();
  consistency->add_option("--threshold", ca.threshold, "Binarize members first (--stability)");
  add_workers(consistency);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate synthetic ensembles");
  synth->require_subcommand(1);
  auto* ell = synth->add_subcommand("ellipsoids", "Fuzzy 3D ellipsoids with outliers");
  ell->add_option("--res", sa.res, "Grid resolution per axis")->capture_default_str();
  ell->add_option("--base", sa.base, "Regular members")->capture_default_str();
  ell->add_option("--outliers", sa.outliers, "Outlier members")->capture_default_str();
  auto* disks = synth->add_subcommand("disks", "Fuzzy 2D disks");
  auto* contours = synth->add_subcommand("contours2d", "Binary 2D contours");
  for (auto* sub : {disks, contours}) {
    sub->add_option("--n", sa.n, "Members")->capture_default_str();
    sub->add_option("--res", sa.res, "Grid resolution per axis")->capture_default_str();
  }
  for (auto* sub : {ell, disks, contours}) {
    sub->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    sub->add_option("--out-dir", sa.out_dir, "Output directory")->required();
    add_workers(sub);
  }

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Timing sweeps over ensemble size or resolution");
  bench->add_option("--mode", be.mode, "ensemble-size | resolution")->capture_default_str();
  bench->add_option("--methods", be.methods, "Comma-separated methods")->delimiter(',');
  bench->add_option("--sizes", be.sizes, "Ensemble sizes (ensemble-size mode)")->delimiter(',');
  bench->add_option("--resolutions", be.resolutions, "Resolutions (resolution mode)")->delimiter(',');
  bench->add_option("--n", be.n, "Ensemble size (resolution mode)")->capture_default_str();
  bench->add_option("--res", be.res, "Resolution (ensemble-size mode)")->capture_default_str();
  bench->add_option("--repeats", be.repeats, "Timed runs per point; the median is reported")->capture_default_str();
  bench->add_option("--seed", be.seed, "Random seed")->capture_default_str();
  bench->add_option("--out", be.out, "Output CSV")->required();
  add_workers(bench);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }

  const std::size_t w = workers == 0 ? default_workers() : workers;
  try {
    if (depth->parsed()) return cmd_depth(da, w, out, err);
    if (boxplot->parsed()) return cmd_boxplot(ba, out);
    if (consistency->parsed()) return cmd_consistency(ca, w, out);
    if (synth->parsed()) {
      const std::string kind = ell->parsed() ? "ellipsoids" : disks->parsed() ? "disks" : "contours2d";
      return cmd_synth(kind, sa, w, out);
    }
    if (bench->parsed()) return cmd_bench(be, w, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace fuzzdepth::cli
